//! End-to-end verification: factor, build the miter, encode, solve, decode
//! and replay. Also hosts the exhaustive enumeration oracle used to cross
//! check verdicts on small inputs.

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{build_miter, Circuit, CircuitError, GateStats};
use crate::cnf::{
    decode_counterexample, solve, tseitin_encode, CnfError, CnfFormula, SatBackend, SolveError,
    Verdict,
};
use crate::factoring::{FactoringMode, ModelFactorings};
use crate::model::{BnnModel, ModelError};
use crate::property::{eval_property, Property, PropertyError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("decoded counterexample does not replay through the reference evaluator")]
    ReplayFailed,
    #[error("{0} input bits exceed the enumeration guard of {1}")]
    TooLargeForEnumeration(usize, usize),
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub factoring: FactoringMode,
    pub timeout: Option<Duration>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            factoring: FactoringMode::Heuristic,
            timeout: None,
        }
    }
}

/// A decoded risk witness, already replayed through the reference
/// evaluators.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub input_bipolar: Vec<i64>,
    pub output_counts: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactoringSummary {
    pub mode: String,
    pub factoring_count: usize,
    pub total_saving: u64,
    pub per_layer_saving: Vec<u64>,
}

/// Everything `verify` learned about one instance.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub factoring: FactoringSummary,
    pub gates: GateStats,
    pub cnf_vars: usize,
    pub cnf_clauses: usize,
    pub solver: String,
    pub solve_seconds: f64,
}

fn summarize(mode: FactoringMode, factorings: &ModelFactorings) -> FactoringSummary {
    FactoringSummary {
        mode: mode.name().to_string(),
        factoring_count: factorings.per_layer.iter().map(|s| s.len()).sum(),
        total_saving: factorings.total_saving(),
        per_layer_saving: factorings
            .per_layer
            .iter()
            .map(|s| s.total_saving())
            .collect(),
    }
}

/// Factor and compile one instance down to CNF.
pub fn encode(
    model: &BnnModel,
    property: &Property,
    mode: FactoringMode,
) -> Result<(Circuit, CnfFormula, ModelFactorings), PipelineError> {
    let factorings = mode.strategy().factor_model(model);
    let miter = build_miter(model, property, &factorings)?;
    let cnf = tseitin_encode(&miter)?;
    Ok((miter, cnf, factorings))
}

/// The whole decision procedure, solved with the given backend.
pub fn verify(
    model: &BnnModel,
    property: &Property,
    options: &VerifyOptions,
    backend: &dyn SatBackend,
) -> Result<VerifyReport, PipelineError> {
    property.validate(model.input_dim(), model.output_dim())?;
    let (miter, cnf, factorings) = encode(model, property, options.factoring)?;
    let result = solve(&cnf, backend, options.timeout)?;

    let counterexample = if result.verdict == Verdict::Sat {
        let bipolar = decode_counterexample(&result, &cnf)?;
        let bits: Vec<bool> = bipolar.iter().map(|&v| v == 1).collect();
        let eval = model.eval_boolean(&bits)?;
        if !eval_property(property, &bits, &eval.outputs)? {
            return Err(PipelineError::ReplayFailed);
        }
        Some(Counterexample {
            input_bipolar: bipolar,
            output_counts: eval.outputs,
        })
    } else {
        None
    };

    Ok(VerifyReport {
        verdict: result.verdict,
        counterexample,
        factoring: summarize(options.factoring, &factorings),
        gates: miter.gate_stats(),
        cnf_vars: cnf.var_count(),
        cnf_clauses: cnf.clauses().len(),
        solver: result.solver,
        solve_seconds: result.elapsed.as_secs_f64(),
    })
}

/// Guard for the enumeration oracle.
pub const ENUMERATION_LIMIT_BITS: usize = 20;

/// Decide by exhaustive input enumeration over the reference evaluator; the
/// independent route `verify` is checked against.
pub fn brute_force_verify(
    model: &BnnModel,
    property: &Property,
) -> Result<(Verdict, Option<Vec<i64>>), PipelineError> {
    property.validate(model.input_dim(), model.output_dim())?;
    let bits = model.input_dim();
    if bits > ENUMERATION_LIMIT_BITS {
        return Err(PipelineError::TooLargeForEnumeration(
            bits,
            ENUMERATION_LIMIT_BITS,
        ));
    }
    for mask in 0..1u64 << bits {
        let input: Vec<bool> = (0..bits).map(|b| mask >> b & 1 == 1).collect();
        let eval = model.eval_boolean(&input)?;
        if eval_property(property, &input, &eval.outputs)? {
            let bipolar = input
                .iter()
                .map(|&b| crate::model::bit_to_bipolar(b) as i64)
                .collect();
            return Ok((Verdict::Sat, Some(bipolar)));
        }
    }
    Ok((Verdict::Unsat, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::VarisatBackend;
    use crate::gen;
    use crate::property::parse_property;

    #[test]
    fn verify_agrees_with_enumeration() {
        let mut rng = gen::rng(111);
        let backend = VarisatBackend;
        for round in 0..25 {
            let dims = [3 + round % 6, 4, 3, 2];
            let model = gen::random_model(&mut rng, &dims);
            let property =
                gen::random_property(&mut rng, dims[0], 2, model.output_fan_in(), 2);
            let (expected, _) = brute_force_verify(&model, &property).unwrap();
            for mode in [FactoringMode::Off, FactoringMode::Heuristic] {
                let options = VerifyOptions {
                    factoring: mode,
                    timeout: None,
                };
                let report = verify(&model, &property, &options, &backend).unwrap();
                assert_eq!(report.verdict, expected, "round {round} mode {mode:?}");
                if report.verdict == Verdict::Sat {
                    assert!(report.counterexample.is_some());
                }
            }
        }
    }

    #[test]
    fn report_carries_diagnostics() {
        let mut rng = gen::rng(112);
        let model = gen::random_model(&mut rng, &[6, 5, 3]);
        let property = parse_property("out[1] >= 1").unwrap();
        let report = verify(
            &model,
            &property,
            &VerifyOptions::default(),
            &VarisatBackend,
        )
        .unwrap();
        assert!(report.cnf_vars > 0);
        assert!(report.cnf_clauses > 0);
        assert_eq!(report.solver, "varisat");
        assert_eq!(report.factoring.mode, "heuristic");
        assert_eq!(report.factoring.per_layer_saving.len(), 2);
    }

    #[test]
    fn impossible_threshold_is_safe() {
        let mut rng = gen::rng(113);
        let model = gen::random_model(&mut rng, &[5, 4, 2]);
        let fan_in = model.output_fan_in();
        let property = parse_property(&format!("out[1] >= {}", fan_in + 1)).unwrap();
        let report = verify(
            &model,
            &property,
            &VerifyOptions::default(),
            &VarisatBackend,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Unsat);
    }

    #[test]
    fn enumeration_guard() {
        let mut rng = gen::rng(114);
        let model = gen::random_model(&mut rng, &[21, 2]);
        let property = parse_property("out[1] >= 0").unwrap();
        assert!(matches!(
            brute_force_verify(&model, &property),
            Err(PipelineError::TooLargeForEnumeration(21, _))
        ));
    }
}
