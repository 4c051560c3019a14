//! SAT-based safety verification of binarized neural networks.
//!
//! The pipeline compiles a network and a risk property into a single-output
//! combinational miter, optionally shares redundant popcount logic between
//! neurons of the same layer, Tseitin-encodes the miter and hands the CNF to
//! a pluggable SAT backend. UNSAT certifies the network safe with respect to
//! the property; a satisfying assignment decodes into a concrete input that
//! triggers it.
//!
//! Module map:
//!
//! - [`model`]: network representation, text format and the two reference
//!   evaluators (bipolar and Boolean domain).
//! - [`property`]: risk property AST, grammar and reference semantics.
//! - [`factoring`]: shared-counter discovery — greedy heuristic,
//!   partitioned variant, exhaustive oracles and the biclique reduction.
//! - [`circuit`]: gate-level miter construction and simulation.
//! - [`cnf`]: Tseitin transformation, DIMACS emission, SAT backends and
//!   counterexample decoding.
//! - [`reductions`]: 3-CNF to verification-instance generator.
//! - [`pipeline`]: the glued decision procedure plus the enumeration
//!   oracle.
//! - [`gen`]: seeded random fixtures for tests and generators.

pub mod circuit;
pub mod cnf;
pub mod factoring;
pub mod gen;
pub mod model;
pub mod pipeline;
pub mod property;
pub mod reductions;

pub use cnf::Verdict;
pub use factoring::FactoringMode;
pub use model::BnnModel;
pub use pipeline::{verify, VerifyOptions, VerifyReport};
pub use property::Property;
