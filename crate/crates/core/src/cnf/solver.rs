//! Pluggable SAT backends.
//!
//! Two kinds are provided behind one trait: an in-process solver, and a
//! subprocess adapter speaking DIMACS in / SAT-competition output (`s`
//! verdict line, `v` value lines) out. Whatever the backend claims, a SAT
//! witness is re-checked against every clause before being returned, so a
//! buggy backend cannot smuggle in a bogus counterexample. Timeouts resolve
//! to the `Unknown` verdict rather than an error.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use super::{emit_dimacs, CnfFormula};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("backend `{0}` failed: {1}")]
    Backend(String, String),
    #[error("backend `{0}` returned an assignment violating clause {1:?}")]
    BadWitness(String, Vec<i32>),
    #[error("result carries no witness (verdict was {0})")]
    NoWitness(Verdict),
    #[error("failed to launch solver `{0}`: {1}")]
    Launch(String, std::io::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Sat => write!(f, "SAT"),
            Verdict::Unsat => write!(f, "UNSAT"),
            Verdict::Unknown => write!(f, "UNKNOWN"),
        }
    }
}

/// Solver outcome plus diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub verdict: Verdict,
    /// Assignment indexed by variable - 1; present exactly for SAT.
    pub witness: Option<Vec<bool>>,
    pub solver: String,
    pub elapsed: Duration,
}

/// A SAT solver usable by the pipeline.
pub trait SatBackend: Send + Sync {
    fn name(&self) -> String;

    /// Solve; `None` timeout means run to completion. Implementations
    /// return `Unknown` on timeout instead of failing.
    fn solve_cnf(
        &self,
        cnf: &CnfFormula,
        timeout: Option<Duration>,
    ) -> Result<SolveResult, SolveError>;
}

/// Solve and re-check any witness against the formula before returning it.
pub fn solve(
    cnf: &CnfFormula,
    backend: &dyn SatBackend,
    timeout: Option<Duration>,
) -> Result<SolveResult, SolveError> {
    let result = backend.solve_cnf(cnf, timeout)?;
    match (result.verdict, &result.witness) {
        (Verdict::Sat, Some(witness)) => {
            if let Some(clause) = cnf
                .clauses()
                .iter()
                .find(|clause| {
                    !clause.iter().any(|&lit| {
                        let value = witness.get(lit.unsigned_abs() as usize - 1).copied();
                        value == Some(lit > 0)
                    })
                })
            {
                return Err(SolveError::BadWitness(result.solver, clause.clone()));
            }
            Ok(result)
        }
        (Verdict::Sat, None) => Err(SolveError::Backend(
            result.solver,
            "SAT verdict without values".into(),
        )),
        (_, Some(_)) => Err(SolveError::Backend(
            result.solver,
            "witness on a non-SAT verdict".into(),
        )),
        _ => Ok(result),
    }
}

/// Decode a SAT witness into the bipolar input vector of the encoded miter.
pub fn decode_counterexample(
    result: &SolveResult,
    cnf: &CnfFormula,
) -> Result<Vec<i64>, SolveError> {
    let witness = result
        .witness
        .as_ref()
        .ok_or(SolveError::NoWitness(result.verdict))?;
    Ok((0..cnf.input_count())
        .map(|i| {
            let var = cnf.input_var(i) as usize;
            if witness.get(var - 1).copied().unwrap_or(false) {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// In-process backend backed by the varisat CDCL solver.
pub struct VarisatBackend;

impl VarisatBackend {
    fn run(cnf: &CnfFormula) -> Result<(Verdict, Option<Vec<bool>>), String> {
        use varisat::ExtendFormula as _;
        let mut formula = varisat::CnfFormula::new();
        formula.set_var_count(cnf.var_count());
        for clause in cnf.clauses() {
            let lits: Vec<varisat::Lit> = clause
                .iter()
                .map(|&l| varisat::Lit::from_dimacs(l as isize))
                .collect();
            formula.add_clause(&lits);
        }
        let mut solver = varisat::Solver::new();
        solver.add_formula(&formula);
        match solver.solve() {
            Ok(true) => {
                let model = solver.model().ok_or("SAT without model")?;
                let mut assignment = vec![false; cnf.var_count()];
                for lit in model {
                    let var = lit.var().index();
                    if var < assignment.len() {
                        assignment[var] = lit.is_positive();
                    }
                }
                Ok((Verdict::Sat, Some(assignment)))
            }
            Ok(false) => Ok((Verdict::Unsat, None)),
            Err(e) => Err(e.to_string()),
        }
    }
}

impl SatBackend for VarisatBackend {
    fn name(&self) -> String {
        "varisat".into()
    }

    fn solve_cnf(
        &self,
        cnf: &CnfFormula,
        timeout: Option<Duration>,
    ) -> Result<SolveResult, SolveError> {
        let start = Instant::now();
        let outcome = match timeout {
            None => Self::run(cnf),
            Some(limit) => {
                // varisat has no interrupt hook; run it on a worker and give
                // up waiting at the deadline. The worker finishes on its own
                // and is dropped with the channel.
                let (tx, rx) = mpsc::channel();
                let cnf = cnf.clone();
                std::thread::spawn(move || {
                    let _ = tx.send(Self::run(&cnf));
                });
                match rx.recv_timeout(limit) {
                    Ok(outcome) => outcome,
                    Err(_) => {
                        return Ok(SolveResult {
                            verdict: Verdict::Unknown,
                            witness: None,
                            solver: self.name(),
                            elapsed: start.elapsed(),
                        })
                    }
                }
            }
        };
        let (verdict, witness) =
            outcome.map_err(|e| SolveError::Backend(self.name(), e))?;
        Ok(SolveResult {
            verdict,
            witness,
            solver: self.name(),
            elapsed: start.elapsed(),
        })
    }
}

/// Subprocess backend: writes DIMACS to a temp file, appends its path to
/// the configured command line, and parses competition-style output.
pub struct SubprocessBackend {
    command: String,
}

impl SubprocessBackend {
    pub fn new(command: impl Into<String>) -> SubprocessBackend {
        SubprocessBackend {
            command: command.into(),
        }
    }

    fn parse_output(&self, cnf: &CnfFormula, stdout: &str) -> Result<SolveResult, SolveError> {
        let mut verdict = None;
        let mut values: Vec<i32> = Vec::new();
        for line in stdout.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("s ") {
                verdict = Some(match rest.trim() {
                    "SATISFIABLE" => Verdict::Sat,
                    "UNSATISFIABLE" => Verdict::Unsat,
                    _ => Verdict::Unknown,
                });
            } else if let Some(rest) = line.strip_prefix("v ") {
                for token in rest.split_whitespace() {
                    let lit: i32 = token.parse().map_err(|_| {
                        SolveError::Backend(self.name(), format!("bad value token `{token}`"))
                    })?;
                    if lit != 0 {
                        values.push(lit);
                    }
                }
            }
        }
        let verdict = verdict.ok_or_else(|| {
            SolveError::Backend(self.name(), "no `s` verdict line in output".into())
        })?;
        let witness = if verdict == Verdict::Sat {
            if values.is_empty() {
                return Err(SolveError::Backend(
                    self.name(),
                    "SATISFIABLE without `v` value lines".into(),
                ));
            }
            let mut assignment = vec![false; cnf.var_count()];
            for lit in values {
                let var = lit.unsigned_abs() as usize;
                if (1..=cnf.var_count()).contains(&var) {
                    assignment[var - 1] = lit > 0;
                }
            }
            Some(assignment)
        } else {
            None
        };
        Ok(SolveResult {
            verdict,
            witness,
            solver: self.name(),
            elapsed: Duration::ZERO,
        })
    }
}

impl SatBackend for SubprocessBackend {
    fn name(&self) -> String {
        format!("subprocess:{}", self.command)
    }

    fn solve_cnf(
        &self,
        cnf: &CnfFormula,
        timeout: Option<Duration>,
    ) -> Result<SolveResult, SolveError> {
        let start = Instant::now();
        let mut file = tempfile::Builder::new()
            .prefix("miter-")
            .suffix(".cnf")
            .tempfile()?;
        file.write_all(emit_dimacs(cnf).as_bytes())?;
        file.flush()?;

        let mut parts = self.command.split_whitespace();
        let program = parts.next().ok_or_else(|| {
            SolveError::Backend(self.name(), "empty solver command".into())
        })?;
        let mut child = Command::new(program)
            .args(parts)
            .arg(file.path())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolveError::Launch(self.command.clone(), e))?;

        if let Some(limit) = timeout {
            let deadline = start + limit;
            loop {
                if child.try_wait()?.is_some() {
                    break;
                }
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Ok(SolveResult {
                        verdict: Verdict::Unknown,
                        witness: None,
                        solver: self.name(),
                        elapsed: start.elapsed(),
                    });
                }
                std::thread::sleep(Duration::from_millis(5));
            }
        }
        let output = child.wait_with_output()?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        let mut result = self.parse_output(cnf, &stdout)?;
        result.elapsed = start.elapsed();
        Ok(result)
    }
}

/// Named backend registry. Built-in names resolve to in-process solvers;
/// anything else is treated as a subprocess command line.
pub struct BackendRegistry {
    builtin: BTreeMap<&'static str, fn() -> Box<dyn SatBackend>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut builtin: BTreeMap<&'static str, fn() -> Box<dyn SatBackend>> = BTreeMap::new();
        builtin.insert("varisat", || Box::new(VarisatBackend));
        BackendRegistry { builtin }
    }
}

impl BackendRegistry {
    pub fn names(&self) -> Vec<&'static str> {
        self.builtin.keys().copied().collect()
    }

    pub fn resolve(&self, spec: &str) -> Box<dyn SatBackend> {
        match self.builtin.get(spec) {
            Some(make) => make(),
            None => Box::new(SubprocessBackend::new(spec)),
        }
    }
}

/// Resolve a `--solver` argument against the default registry.
pub fn resolve_backend(spec: &str) -> Box<dyn SatBackend> {
    BackendRegistry::default().resolve(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn formula(var_count: usize, clauses: Vec<Vec<i32>>) -> CnfFormula {
        CnfFormula::from_clauses(var_count, clauses).unwrap()
    }

    #[test]
    fn trivial_unsat_pair() {
        let cnf = formula(1, vec![vec![1], vec![-1]]);
        let result = solve(&cnf, &VarisatBackend, None).unwrap();
        assert_eq!(result.verdict, Verdict::Unsat);
        assert!(result.witness.is_none());
    }

    #[test]
    fn trivial_sat_unit() {
        let cnf = formula(1, vec![vec![1]]);
        let result = solve(&cnf, &VarisatBackend, None).unwrap();
        assert_eq!(result.verdict, Verdict::Sat);
        assert_eq!(result.witness, Some(vec![true]));
    }

    #[test]
    fn decode_requires_witness() {
        let cnf = formula(1, vec![vec![1], vec![-1]]);
        let result = solve(&cnf, &VarisatBackend, None).unwrap();
        assert!(matches!(
            decode_counterexample(&result, &cnf),
            Err(SolveError::NoWitness(Verdict::Unsat))
        ));
    }

    fn script_backend(dir: &std::path::Path, name: &str, body: &str) -> SubprocessBackend {
        use std::os::unix::fs::PermissionsExt;
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        SubprocessBackend::new(path.display().to_string())
    }

    #[test]
    fn subprocess_parses_competition_output() {
        let dir = tempfile::tempdir().unwrap();
        let sat = script_backend(
            dir.path(),
            "fake-sat.sh",
            "#!/bin/sh\necho 's SATISFIABLE'\necho 'v 1 -2 0'\n",
        );
        let cnf = formula(2, vec![vec![1, 2], vec![-2]]);
        let result = solve(&cnf, &sat, None).unwrap();
        assert_eq!(result.verdict, Verdict::Sat);
        assert_eq!(result.witness, Some(vec![true, false]));

        let unsat = script_backend(dir.path(), "fake-unsat.sh", "#!/bin/sh\necho 's UNSATISFIABLE'\n");
        let result = solve(&cnf, &unsat, None).unwrap();
        assert_eq!(result.verdict, Verdict::Unsat);
    }

    #[test]
    fn subprocess_bad_witness_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let lying = script_backend(
            dir.path(),
            "fake-lying.sh",
            "#!/bin/sh\necho 's SATISFIABLE'\necho 'v -1 -2 0'\n",
        );
        let cnf = formula(2, vec![vec![1, 2]]);
        assert!(matches!(
            solve(&cnf, &lying, None),
            Err(SolveError::BadWitness(..))
        ));
    }

    #[test]
    fn subprocess_garbage_output_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let garbage = script_backend(dir.path(), "fake-garbage.sh", "#!/bin/sh\necho 'hello'\n");
        let cnf = formula(1, vec![vec![1]]);
        assert!(matches!(
            solve(&cnf, &garbage, None),
            Err(SolveError::Backend(..))
        ));
    }

    #[test]
    fn subprocess_timeout_is_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let slow = script_backend(
            dir.path(),
            "fake-slow.sh",
            "#!/bin/sh\nsleep 5\necho 's SATISFIABLE'\necho 'v 1 0'\n",
        );
        let cnf = formula(1, vec![vec![1]]);
        let result = solve(&cnf, &slow, Some(Duration::from_millis(50))).unwrap();
        assert_eq!(result.verdict, Verdict::Unknown);
    }

    #[test]
    fn registry_resolves_builtin_and_commands() {
        let registry = BackendRegistry::default();
        assert_eq!(registry.names(), vec!["varisat"]);
        assert_eq!(registry.resolve("varisat").name(), "varisat");
        assert_eq!(
            registry.resolve("minisat -verb=0").name(),
            "subprocess:minisat -verb=0"
        );
    }

    #[test]
    fn random_formulas_match_enumeration() {
        use rand::Rng;
        let mut rng = crate::gen::rng(91);
        for _ in 0..100 {
            let vars = rng.gen_range(1..=8usize);
            let clause_count = rng.gen_range(1..=12usize);
            let clauses: Vec<Vec<i32>> = (0..clause_count)
                .map(|_| {
                    let width = rng.gen_range(1..=3usize);
                    let mut clause: Vec<i32> = Vec::new();
                    while clause.len() < width {
                        let var = rng.gen_range(1..=vars) as i32;
                        let lit = if rng.gen() { var } else { -var };
                        if !clause.contains(&-lit) && !clause.contains(&lit) {
                            clause.push(lit);
                        }
                    }
                    clause
                })
                .collect();
            let cnf = formula(vars, clauses);
            let expected = (0..1u32 << vars).any(|mask| {
                let assignment: Vec<bool> = (0..vars).map(|b| mask >> b & 1 == 1).collect();
                cnf.check_witness(&assignment)
            });
            let result = solve(&cnf, &VarisatBackend, None).unwrap();
            assert_eq!(result.verdict == Verdict::Sat, expected);
        }
    }
}
