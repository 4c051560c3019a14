//! Tseitin transformation of miters into CNF, DIMACS emission, and the
//! pluggable SAT backends in [`solver`].
//!
//! Every circuit net gets one SAT variable (`net id + 1`); adders are
//! decomposed into XOR/AND/OR constraints with fresh auxiliary variables
//! before clause emission. A unit clause asserts the miter output, so the
//! formula is satisfiable exactly when some input drives the property
//! module to 1.

use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Circuit, Gate, Net};

pub mod solver;

pub use solver::{
    decode_counterexample, resolve_backend, solve, BackendRegistry, SatBackend, SolveError,
    SolveResult, SubprocessBackend, VarisatBackend, Verdict,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("clause contains literal 0")]
    ZeroLiteral,
    #[error("literal {0} outside variable range 1..={1}")]
    LiteralOutOfRange(i32, usize),
    #[error("clause contains both polarities of variable {0}")]
    BothPolarities(u32),
    #[error("circuit has no designated output to assert")]
    NoOutput,
}

/// A CNF formula over positive variable identifiers `1..=var_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    var_count: usize,
    clauses: Vec<Vec<i32>>,
    /// SAT variable for each circuit net, indexed by net id; empty for
    /// formulas not derived from a circuit.
    varmap: Vec<u32>,
    /// Number of primary-input nets at the head of `varmap`.
    input_count: usize,
}

impl CnfFormula {
    /// Build a bare formula (no circuit attached), validating the clause
    /// invariants.
    pub fn from_clauses(var_count: usize, clauses: Vec<Vec<i32>>) -> Result<Self, CnfError> {
        let formula = CnfFormula {
            var_count,
            clauses,
            varmap: Vec::new(),
            input_count: 0,
        };
        formula.validate()?;
        Ok(formula)
    }

    fn validate(&self) -> Result<(), CnfError> {
        for clause in &self.clauses {
            for &lit in clause {
                if lit == 0 {
                    return Err(CnfError::ZeroLiteral);
                }
                if lit.unsigned_abs() as usize > self.var_count {
                    return Err(CnfError::LiteralOutOfRange(lit, self.var_count));
                }
                if clause.contains(&-lit) {
                    return Err(CnfError::BothPolarities(lit.unsigned_abs()));
                }
            }
        }
        Ok(())
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    /// SAT variable of primary input `i`.
    pub fn input_var(&self, i: usize) -> i32 {
        if self.varmap.is_empty() {
            i as i32 + 1
        } else {
            self.varmap[i] as i32
        }
    }

    /// SAT variable of an arbitrary circuit net.
    pub fn net_var(&self, net: Net) -> Option<i32> {
        self.varmap.get(net.index()).map(|&v| v as i32)
    }

    /// True iff the assignment (index 0 = variable 1) satisfies every
    /// clause.
    pub fn check_witness(&self, assignment: &[bool]) -> bool {
        if assignment.len() < self.var_count {
            return false;
        }
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let value = assignment[lit.unsigned_abs() as usize - 1];
                (lit > 0) == value
            })
        })
    }
}

/// Encode a circuit into an equisatisfiable CNF with the designated output
/// asserted true.
pub fn tseitin_encode(circuit: &Circuit) -> Result<CnfFormula, CnfError> {
    let output = circuit.output().ok_or(CnfError::NoOutput)?;
    let mut var_count = circuit.net_count();
    let mut clauses: Vec<Vec<i32>> = Vec::with_capacity(circuit.gates().len() * 3 + 1);
    let var = |net: Net| net.0 as i32 + 1;
    let mut fresh = || {
        var_count += 1;
        var_count as i32
    };

    fn and_clauses(clauses: &mut Vec<Vec<i32>>, out: i32, a: i32, b: i32) {
        clauses.push(vec![-out, a]);
        clauses.push(vec![-out, b]);
        clauses.push(vec![out, -a, -b]);
    }
    fn or_clauses(clauses: &mut Vec<Vec<i32>>, out: i32, a: i32, b: i32) {
        clauses.push(vec![out, -a]);
        clauses.push(vec![out, -b]);
        clauses.push(vec![-out, a, b]);
    }
    fn xor_clauses(clauses: &mut Vec<Vec<i32>>, out: i32, a: i32, b: i32) {
        clauses.push(vec![-out, a, b]);
        clauses.push(vec![-out, -a, -b]);
        clauses.push(vec![out, -a, b]);
        clauses.push(vec![out, a, -b]);
    }

    for inst in circuit.gates() {
        let out = var(inst.out);
        match inst.op {
            Gate::Const(value) => clauses.push(vec![if value { out } else { -out }]),
            Gate::Not(a) => {
                clauses.push(vec![-out, -var(a)]);
                clauses.push(vec![out, var(a)]);
            }
            Gate::And(a, b) => and_clauses(&mut clauses, out, var(a), var(b)),
            Gate::Or(a, b) => or_clauses(&mut clauses, out, var(a), var(b)),
            Gate::Xor(a, b) => xor_clauses(&mut clauses, out, var(a), var(b)),
            Gate::Xnor(a, b) => {
                // out <-> !(a ^ b), i.e. xor clauses with out negated.
                clauses.push(vec![out, var(a), var(b)]);
                clauses.push(vec![out, -var(a), -var(b)]);
                clauses.push(vec![-out, -var(a), var(b)]);
                clauses.push(vec![-out, var(a), -var(b)]);
            }
            Gate::HalfAdder { a, b } => {
                let carry = var(inst.carry.expect("adders carry"));
                xor_clauses(&mut clauses, out, var(a), var(b));
                and_clauses(&mut clauses, carry, var(a), var(b));
            }
            Gate::FullAdder { a, b, c } => {
                // Decompose: t = a^b; sum = t^c; carry = (a&b) | (t&c).
                let carry = var(inst.carry.expect("adders carry"));
                let (a, b, c) = (var(a), var(b), var(c));
                let t = fresh();
                let ab = fresh();
                let tc = fresh();
                xor_clauses(&mut clauses, t, a, b);
                xor_clauses(&mut clauses, out, t, c);
                and_clauses(&mut clauses, ab, a, b);
                and_clauses(&mut clauses, tc, t, c);
                or_clauses(&mut clauses, carry, ab, tc);
            }
        }
    }
    clauses.push(vec![var(output)]);

    let formula = CnfFormula {
        var_count,
        clauses,
        varmap: (1..=circuit.net_count() as u32).collect(),
        input_count: circuit.input_count(),
    };
    debug_assert!(formula.validate().is_ok());
    Ok(formula)
}

/// Emit the formula in DIMACS CNF: optional `c input` comments mapping the
/// primary inputs, the `p cnf` header, one zero-terminated clause per line.
pub fn emit_dimacs(cnf: &CnfFormula) -> String {
    let mut out = String::new();
    for i in 0..cnf.input_count {
        writeln!(out, "c input {} var {}", i + 1, cnf.input_var(i)).unwrap();
    }
    writeln!(out, "p cnf {} {}", cnf.var_count, cnf.clauses.len()).unwrap();
    for clause in &cnf.clauses {
        for &lit in clause {
            write!(out, "{} ", lit).unwrap();
        }
        writeln!(out, "0").unwrap();
    }
    out
}
