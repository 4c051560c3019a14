//! Command-line frontend: verify a network against a risk property, emit
//! DIMACS, inspect factorings, evaluate inputs, and generate reduction
//! fixtures.
//!
//! Exit codes of `verify`: 0 the property cannot be triggered (SAFE), 1 a
//! counterexample was found (RISK), 2 the solver gave up (UNKNOWN). Errors
//! exit with code 10 (usage, I/O, parsing) or 11 (solver backend).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bnnsat::cnf::{emit_dimacs, resolve_backend, SolveError};
use bnnsat::factoring::{self, bipartite, render_report, FactoringMode, StrategyRegistry};
use bnnsat::model::{parse_model, serialize_model, BnnModel, WeightMatrix};
use bnnsat::pipeline::{self, VerifyOptions, VerifyReport};
use bnnsat::property::{parse_property, Property};
use bnnsat::reductions::{sat3_to_bnn, Cnf3Instance};
use bnnsat::Verdict;

#[derive(Parser)]
#[command(name = "bnnsat", version, about = "SAT-based verification of binarized neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Seed for the random generators used by fixture commands.
    #[arg(long, global = true, default_value_t = bnnsat::gen::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FactoringArg {
    Off,
    Heuristic,
    Partitioned,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Text,
    Structured,
}

#[derive(Args)]
struct PipelineArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,

    /// Risk property: a file path or an inline expression.
    #[arg(long)]
    property: String,

    /// Counter-sharing strategy.
    #[arg(long, value_enum, default_value = "heuristic")]
    factoring: FactoringArg,

    /// Block height for partitioned factoring.
    #[arg(long, default_value_t = factoring::partition::DEFAULT_BLOCK)]
    block_rows: usize,

    /// Block width for partitioned factoring.
    #[arg(long, default_value_t = factoring::partition::DEFAULT_BLOCK)]
    block_cols: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether any input triggers the property.
    Verify {
        #[command(flatten)]
        pipeline: PipelineArgs,

        /// SAT backend: a built-in name or an external solver command.
        #[arg(long, default_value = "varisat")]
        solver: String,

        /// Solver timeout in seconds (0 = none).
        #[arg(long, default_value_t = 0)]
        timeout: u64,

        /// Also write the miter CNF in DIMACS to this path.
        #[arg(long)]
        emit_cnf: Option<PathBuf>,

        /// Report style.
        #[arg(long, value_enum, default_value = "text")]
        report: ReportArg,
    },
    /// Encode the miter to DIMACS without solving.
    Encode {
        #[command(flatten)]
        pipeline: PipelineArgs,

        /// Output DIMACS path.
        #[arg(long)]
        emit_cnf: PathBuf,
    },
    /// Report the factorings a strategy finds for a model or raw matrix.
    Factor {
        /// Model file; factors every layer.
        #[arg(long, conflicts_with = "matrix")]
        model: Option<PathBuf>,

        /// Raw weight matrix file: rows of space-separated -1/1 values.
        #[arg(long)]
        matrix: Option<PathBuf>,

        #[arg(long, value_enum, default_value = "heuristic")]
        factoring: FactoringArg,

        #[arg(long, default_value_t = factoring::partition::DEFAULT_BLOCK)]
        block_rows: usize,

        #[arg(long, default_value_t = factoring::partition::DEFAULT_BLOCK)]
        block_cols: usize,
    },
    /// Evaluate a model on one input vector in both domains.
    Eval {
        #[arg(long)]
        model: PathBuf,

        /// Input as space-separated bipolar values (`1 -1 ...`) or bits
        /// (`1 0 ...`).
        #[arg(long)]
        input: String,
    },
    /// Reduce a 3-CNF (DIMACS) to a model plus risk property.
    Gen3sat {
        /// Input DIMACS file; alternatively use --random.
        #[arg(long, conflicts_with = "random")]
        cnf: Option<PathBuf>,

        /// Generate a random instance: `<vars>,<clauses>` (uses --seed).
        #[arg(long)]
        random: Option<String>,

        /// Output model path.
        #[arg(long)]
        out_model: PathBuf,

        /// Output property path.
        #[arg(long)]
        out_property: PathBuf,
    },
    /// Reduce a bipartite graph to a factoring weight matrix.
    GenMeb {
        /// Graph file (`left N` / `right M` / edge lines).
        #[arg(long)]
        graph: PathBuf,

        /// Output matrix path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide by exhaustive input enumeration (small models only).
    Bruteforce {
        #[arg(long)]
        model: PathBuf,

        #[arg(long)]
        property: String,
    },
}

fn factoring_mode(arg: FactoringArg, block_rows: usize, block_cols: usize) -> FactoringMode {
    match arg {
        FactoringArg::Off => FactoringMode::Off,
        FactoringArg::Heuristic => FactoringMode::Heuristic,
        FactoringArg::Partitioned => FactoringMode::Partitioned {
            block_rows,
            block_cols,
        },
    }
}

fn load_model(path: &Path) -> Result<BnnModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing model {}", path.display()))
}

/// `--property` accepts either a path to a property file or the expression
/// itself.
fn load_property(spec: &str) -> Result<Property> {
    let text = match std::fs::read_to_string(spec) {
        Ok(contents) => contents,
        Err(_) => spec.to_string(),
    };
    parse_property(text.trim()).map_err(|e| anyhow!("parsing property: {e}"))
}

fn print_text_report(report: &VerifyReport) {
    let verdict = match report.verdict {
        Verdict::Unsat => "SAFE (UNSAT)",
        Verdict::Sat => "RISK (SAT)",
        Verdict::Unknown => "UNKNOWN",
    };
    println!("verdict: {verdict}");
    println!(
        "factoring: {} ({} factorings, saving {})",
        report.factoring.mode, report.factoring.factoring_count, report.factoring.total_saving
    );
    println!("gates: {}", report.gates);
    println!("cnf: {} vars, {} clauses", report.cnf_vars, report.cnf_clauses);
    println!("solver: {} ({:.3}s)", report.solver, report.solve_seconds);
    if let Some(cex) = &report.counterexample {
        let input: Vec<String> = cex.input_bipolar.iter().map(|v| v.to_string()).collect();
        let counts: Vec<String> = cex.output_counts.iter().map(|v| v.to_string()).collect();
        println!("counterexample input: {}", input.join(" "));
        println!("counterexample output counts: {}", counts.join(" "));
    }
}

fn parse_matrix_file(text: &str) -> Result<WeightMatrix> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| anyhow!("line {}: bad value", n + 1)))
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    WeightMatrix::from_bipolar(&rows).map_err(|e| anyhow!("matrix: {e}"))
}

fn serialize_matrix(matrix: &WeightMatrix) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for row in matrix.row_iter() {
        let vals: Vec<String> = row
            .iter()
            .map(|&b| bnnsat::model::bit_to_bipolar(b).to_string())
            .collect();
        writeln!(out, "{}", vals.join(" ")).unwrap();
    }
    out
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::Verify {
            pipeline: args,
            solver,
            timeout,
            emit_cnf,
            report,
        } => {
            let model = load_model(&args.model)?;
            let property = load_property(&args.property)?;
            let mode = factoring_mode(args.factoring, args.block_rows, args.block_cols);
            if let Some(path) = emit_cnf {
                let (_, cnf, _) = pipeline::encode(&model, &property, mode)?;
                std::fs::write(&path, emit_dimacs(&cnf))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let options = VerifyOptions {
                factoring: mode,
                timeout: (timeout > 0).then(|| Duration::from_secs(timeout)),
            };
            let backend = resolve_backend(&solver);
            let report_data = pipeline::verify(&model, &property, &options, backend.as_ref())?;
            match report {
                ReportArg::Text => print_text_report(&report_data),
                ReportArg::Structured => {
                    println!("{}", serde_json::to_string_pretty(&report_data)?)
                }
            }
            Ok(match report_data.verdict {
                Verdict::Unsat => ExitCode::from(0),
                Verdict::Sat => ExitCode::from(1),
                Verdict::Unknown => ExitCode::from(2),
            })
        }
        Cmd::Encode {
            pipeline: args,
            emit_cnf,
        } => {
            let model = load_model(&args.model)?;
            let property = load_property(&args.property)?;
            let mode = factoring_mode(args.factoring, args.block_rows, args.block_cols);
            let (_, cnf, factorings) = pipeline::encode(&model, &property, mode)?;
            std::fs::write(&emit_cnf, emit_dimacs(&cnf))
                .with_context(|| format!("writing {}", emit_cnf.display()))?;
            println!(
                "wrote {} ({} vars, {} clauses, factoring saving {})",
                emit_cnf.display(),
                cnf.var_count(),
                cnf.clauses().len(),
                factorings.total_saving()
            );
            Ok(ExitCode::from(0))
        }
        Cmd::Factor {
            model,
            matrix,
            factoring,
            block_rows,
            block_cols,
        } => {
            let mode = factoring_mode(factoring, block_rows, block_cols);
            let registry = StrategyRegistry::builtin(block_rows, block_cols);
            let strategy = registry
                .get(mode.name())
                .expect("built-in strategies are registered");
            let factorings = match (&model, &matrix) {
                (Some(path), None) => strategy.factor_model(&load_model(path)?),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let matrix = parse_matrix_file(&text)?;
                    bnnsat::factoring::ModelFactorings {
                        per_layer: vec![strategy.factor_layer(&matrix)],
                    }
                }
                _ => return Err(anyhow!("pass exactly one of --model or --matrix")),
            };
            print!("{}", render_report(&factorings));
            Ok(ExitCode::from(0))
        }
        Cmd::Eval { model, input } => {
            let model = load_model(&model)?;
            let values: Vec<i64> = input
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| anyhow!("bad input value `{t}`")))
                .collect::<Result<_>>()?;
            // Accept bits as well as bipolar values.
            let bipolar: Vec<i64> = values
                .iter()
                .map(|&v| if v == 0 { -1 } else { v })
                .collect();
            let eval = model.eval_bipolar(&bipolar)?;
            let bits: Vec<bool> = bipolar.iter().map(|&v| v == 1).collect();
            let boolean = model.eval_boolean(&bits)?;
            let sums: Vec<String> = eval.outputs.iter().map(|v| v.to_string()).collect();
            let counts: Vec<String> = boolean.outputs.iter().map(|v| v.to_string()).collect();
            println!("bipolar outputs: {}", sums.join(" "));
            println!("output counts: {}", counts.join(" "));
            Ok(ExitCode::from(0))
        }
        Cmd::Gen3sat {
            cnf,
            random,
            out_model,
            out_property,
        } => {
            let instance = match (cnf, random) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    Cnf3Instance::parse_dimacs(&text)?
                }
                (None, Some(shape)) => {
                    let (vars, clauses) = shape
                        .split_once(',')
                        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                        .ok_or_else(|| anyhow!("--random expects `<vars>,<clauses>`"))?;
                    let mut rng = bnnsat::gen::rng(cli.seed);
                    bnnsat::gen::random_cnf3(&mut rng, vars, clauses)
                }
                _ => return Err(anyhow!("pass exactly one of --cnf or --random")),
            };
            let (model, property) = sat3_to_bnn(&instance)?;
            std::fs::write(&out_model, serialize_model(&model))
                .with_context(|| format!("writing {}", out_model.display()))?;
            std::fs::write(&out_property, format!("{property}\n"))
                .with_context(|| format!("writing {}", out_property.display()))?;
            println!(
                "wrote {} and {} ({} inputs, {} clause neurons)",
                out_model.display(),
                out_property.display(),
                model.input_dim(),
                model.output_dim()
            );
            Ok(ExitCode::from(0))
        }
        Cmd::GenMeb { graph, out } => {
            let text = std::fs::read_to_string(&graph)
                .with_context(|| format!("reading {}", graph.display()))?;
            let parsed = bipartite::parse_graph(&text)?;
            let matrix = bipartite::reduce_meb_to_factoring(&parsed)?;
            std::fs::write(&out, serialize_matrix(&matrix))
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {} ({} neurons x {} inputs)",
                out.display(),
                matrix.rows(),
                matrix.cols()
            );
            Ok(ExitCode::from(0))
        }
        Cmd::Bruteforce { model, property } => {
            let model = load_model(&model)?;
            let property = load_property(&property)?;
            let (verdict, witness) = pipeline::brute_force_verify(&model, &property)?;
            match verdict {
                Verdict::Sat => {
                    let input: Vec<String> =
                        witness.unwrap().iter().map(|v| v.to_string()).collect();
                    println!("verdict: RISK (witness by enumeration)");
                    println!("counterexample input: {}", input.join(" "));
                    Ok(ExitCode::from(1))
                }
                _ => {
                    println!("verdict: SAFE (exhausted all inputs)");
                    Ok(ExitCode::from(0))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let backend_error = err
                .downcast_ref::<bnnsat::pipeline::PipelineError>()
                .map(|e| matches!(e, bnnsat::pipeline::PipelineError::Solve(_)))
                .unwrap_or(false)
                || err.downcast_ref::<SolveError>().is_some();
            ExitCode::from(if backend_error { 11 } else { 10 })
        }
    }
}
