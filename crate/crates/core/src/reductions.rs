//! 3-CNF to network-verification instances, after the NP-hardness
//! construction: one single-layer network plus a risk property whose
//! verification verdict matches the formula's satisfiability, and whose
//! counterexamples decode back into satisfying assignments.
//!
//! Layers here are fully connected, so "no link" cannot be expressed
//! directly. Each formula variable therefore occupies a complementary input
//! pair `(p, q)`: the property pins `q` to the negation of `p`, a mentioned
//! literal weights the pair `(-1, +1)` or `(+1, -1)` contributing `-2`/`+2`
//! to the neuron sum depending on satisfaction, and an unmentioned variable
//! weights it `(+1, +1)` so the pair cancels to zero. Three always-false
//! padding variables bring every clause to exactly three distinct literals,
//! which fixes the margin: with the trigger pair at `+1`, a clause neuron's
//! sum is at most `-1` when the clause is satisfied and exactly `+3` when
//! it is not. In count form the risk property is then uniform: every clause
//! neuron stays below its activation threshold.

use thiserror::Error;

use crate::model::{BnnModel, ModelError, WeightMatrix};
use crate::property::Property;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("literal {0} references no variable (vars 1..={1})")]
    BadLiteral(i32, usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("clause has {0} literals; at most 3 supported")]
    ClauseTooWide(usize),
    #[error("instance needs at least one variable")]
    NoVariables,
    #[error("expected a decoded input of length {expected}, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("complement pair of variable {0} carries equal values")]
    RailViolation(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A 3-CNF instance: clauses of exactly three (possibly repeated) literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf3Instance {
    var_count: usize,
    clauses: Vec<[i32; 3]>,
}

impl Cnf3Instance {
    pub fn new(var_count: usize, clauses: Vec<[i32; 3]>) -> Result<Self, ReductionError> {
        if var_count == 0 {
            return Err(ReductionError::NoVariables);
        }
        for clause in &clauses {
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > var_count {
                    return Err(ReductionError::BadLiteral(lit, var_count));
                }
            }
        }
        Ok(Cnf3Instance { var_count, clauses })
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn clauses(&self) -> &[[i32; 3]] {
        &self.clauses
    }

    /// Parse DIMACS CNF; clauses shorter than 3 literals are padded by
    /// repetition, wider ones are rejected.
    pub fn parse_dimacs(text: &str) -> Result<Self, ReductionError> {
        let err = |line: usize, msg: &str| ReductionError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut var_count = None;
        let mut clauses = Vec::new();
        let mut pending: Vec<i32> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let n = n + 1;
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p cnf ") {
                let mut it = rest.split_whitespace();
                var_count = Some(
                    it.next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(n, "bad variable count"))?,
                );
                continue;
            }
            for token in line.split_whitespace() {
                let lit: i32 = token
                    .parse()
                    .map_err(|_| err(n, &format!("bad literal `{token}`")))?;
                if lit == 0 {
                    match pending.len() {
                        0 => continue,
                        1 => {
                            let l = pending[0];
                            clauses.push([l, l, l]);
                        }
                        2 => clauses.push([pending[0], pending[1], pending[1]]),
                        3 => clauses.push([pending[0], pending[1], pending[2]]),
                        w => return Err(ReductionError::ClauseTooWide(w)),
                    }
                    pending.clear();
                } else {
                    if pending.len() == 3 {
                        return Err(ReductionError::ClauseTooWide(4));
                    }
                    pending.push(lit);
                }
            }
        }
        if !pending.is_empty() {
            return Err(ReductionError::Parse {
                line: 0,
                msg: "unterminated clause".into(),
            });
        }
        let var_count = var_count.ok_or_else(|| err(0, "missing `p cnf` header"))?;
        Cnf3Instance::new(var_count, clauses)
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let value = assignment[lit.unsigned_abs() as usize - 1];
                (lit > 0) == value
            })
        })
    }

    /// Exhaustive satisfiability oracle; feasible for small variable counts.
    pub fn enumerate_satisfiable(&self) -> Option<Vec<bool>> {
        assert!(self.var_count <= 24, "enumeration oracle limit");
        (0..1u64 << self.var_count).find_map(|mask| {
            let assignment: Vec<bool> =
                (0..self.var_count).map(|b| mask >> b & 1 == 1).collect();
            self.is_satisfied_by(&assignment).then_some(assignment)
        })
    }
}

/// Geometry of a reduced instance.
struct Layout {
    /// Formula variables.
    m: usize,
    /// Formula variables plus the three padding variables.
    padded: usize,
}

impl Layout {
    fn new(m: usize) -> Layout {
        Layout { m, padded: m + 3 }
    }

    /// Input column (0-based) of the positive rail of variable `v` (1-based;
    /// padding variables included).
    fn p(&self, v: usize) -> usize {
        2 * (v - 1)
    }

    fn q(&self, v: usize) -> usize {
        2 * (v - 1) + 1
    }

    fn trigger_p(&self) -> usize {
        2 * self.padded
    }

    fn trigger_q(&self) -> usize {
        2 * self.padded + 1
    }

    fn input_dim(&self) -> usize {
        2 * self.padded + 2
    }

    /// A clause neuron reads `-1` exactly when its count stays at or below
    /// this bound (one below the activation threshold).
    fn count_bound(&self) -> u32 {
        self.padded as u32 + 1
    }
}

/// Build the single-layer network and risk property for a 3-CNF instance.
///
/// The verification pipeline reports RISK (SAT) on the result exactly when
/// the instance is satisfiable, and any counterexample decodes through
/// [`decode_sat3_witness`] into a satisfying assignment.
pub fn sat3_to_bnn(instance: &Cnf3Instance) -> Result<(BnnModel, Property), ReductionError> {
    let layout = Layout::new(instance.var_count());
    let m = layout.m;
    let (z1, z2, z3) = (m + 1, m + 2, m + 3);

    // Normalize each clause to exactly three distinct-variable literals:
    // dedupe repeated literals, pad with always-false positive literals of
    // the padding variables, and replace tautological clauses by an
    // always-satisfied one over the padding variables.
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let clause_literals = |clause: &[i32; 3]| -> Vec<i32> {
        let mut lits: Vec<i32> = Vec::new();
        for &lit in clause {
            if !lits.contains(&lit) {
                lits.push(lit);
            }
        }
        if lits.iter().any(|&l| lits.contains(&-l)) {
            return vec![-(z1 as i32), -(z2 as i32), -(z3 as i32)];
        }
        let pads = [z1 as i32, z2 as i32];
        let mut pads = pads.iter();
        while lits.len() < 3 {
            lits.push(*pads.next().expect("at most two pads needed"));
        }
        lits
    };

    let mut normalized: Vec<Vec<i32>> = instance.clauses().iter().map(clause_literals).collect();
    if normalized.is_empty() {
        // A formula without clauses is trivially satisfiable; keep one
        // always-satisfied neuron so the model is well-formed.
        normalized.push(vec![-(z1 as i32), -(z2 as i32), -(z3 as i32)]);
    }

    for lits in &normalized {
        // Bias weight -1, then one weight per input column.
        let mut row = vec![-1i64; layout.input_dim() + 1];
        for v in 1..=layout.padded {
            let (p, q) = (layout.p(v) + 1, layout.q(v) + 1);
            match lits.iter().find(|&&l| l.unsigned_abs() as usize == v) {
                Some(&l) if l > 0 => {
                    row[p] = -1;
                    row[q] = 1;
                }
                Some(_) => {
                    row[p] = 1;
                    row[q] = -1;
                }
                None => {
                    row[p] = 1;
                    row[q] = 1;
                }
            }
        }
        row[layout.trigger_p() + 1] = -1;
        row[layout.trigger_q() + 1] = 1;
        rows.push(row);
    }

    let matrix = WeightMatrix::from_bipolar(&rows)?;
    let model = BnnModel::new(vec![layout.input_dim(), rows.len()], vec![matrix])?;

    // Risk property: complement rails for the formula variables, padding
    // variables pinned false, trigger pinned true, and (under the trigger)
    // every clause neuron below its activation threshold.
    let mut conjuncts = Vec::new();
    for v in 1..=m {
        let p = Property::input_atom(layout.p(v), true);
        let q = Property::input_atom(layout.q(v), false);
        let np = Property::input_atom(layout.p(v), false);
        let nq = Property::input_atom(layout.q(v), true);
        conjuncts.push(Property::or(Property::and(p, q), Property::and(np, nq)));
    }
    for z in [z1, z2, z3] {
        conjuncts.push(Property::input_atom(layout.p(z), false));
        conjuncts.push(Property::input_atom(layout.q(z), true));
    }
    conjuncts.push(Property::input_atom(layout.trigger_p(), true));
    conjuncts.push(Property::input_atom(layout.trigger_q(), false));

    let all_low = Property::all(
        (0..model.output_dim())
            .map(|i| {
                Property::output_atom(i, crate::property::Relation::Le, layout.count_bound())
            })
            .collect(),
    );
    conjuncts.push(Property::implies(
        Property::input_atom(layout.trigger_p(), true),
        all_low,
    ));

    Ok((model, Property::all(conjuncts)))
}

/// Map a bipolar counterexample of the reduced instance back to an
/// assignment of the original variables.
pub fn decode_sat3_witness(
    instance: &Cnf3Instance,
    input: &[i64],
) -> Result<Vec<bool>, ReductionError> {
    let layout = Layout::new(instance.var_count());
    if input.len() != layout.input_dim() {
        return Err(ReductionError::InputLength {
            expected: layout.input_dim(),
            got: input.len(),
        });
    }
    let mut assignment = Vec::with_capacity(layout.m);
    for v in 1..=layout.m {
        let p = input[layout.p(v)];
        let q = input[layout.q(v)];
        if p == q {
            return Err(ReductionError::RailViolation(v));
        }
        assignment.push(p == 1);
    }
    Ok(assignment)
}
