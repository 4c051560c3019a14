//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measurements (visible with `--nocapture`).

use bnnsat::circuit::{build_bnn_module, build_miter, Circuit};
use bnnsat::cnf::{
    decode_counterexample, emit_dimacs, solve, tseitin_encode, VarisatBackend, Verdict,
};
use bnnsat::factoring::bipartite::{
    brute_force_max_edge_biclique, reduce_meb_to_factoring, reduced_extra_row,
};
use bnnsat::factoring::brute::{
    brute_force_optimal_factoring_containing, brute_force_optimal_factorings,
};
use bnnsat::factoring::greedy::{find_factorings, get_factoring};
use bnnsat::factoring::{FactoringMode, FactoringStrategy, ModelFactorings, PartitionedFactoring};
use bnnsat::gen;
use bnnsat::model::{
    bit_to_bipolar, convert_domain, parse_model, BnnModel, WeightMatrix,
};
use bnnsat::pipeline::{brute_force_verify, verify, VerifyOptions};
use bnnsat::property::{eval_property, parse_property};
use bnnsat::reductions::{decode_sat3_witness, sat3_to_bnn};

use rand::Rng;

/// Criterion 1: the worked single-neuron example reproduces exactly in both
/// evaluators and in the built neuron circuit, in under a second.
#[test]
fn criterion1_worked_neuron_example() {
    let start = std::time::Instant::now();

    let text = "layers 1\ndims 4 1\nweights 1\n-1 1 -1 -1 1\n";
    let model = parse_model(text).unwrap();

    let bipolar = model.eval_bipolar(&[1, -1, 1, 1]).unwrap();
    assert_eq!(bipolar.sums[0][0], 1, "weighted sum");
    assert!(bipolar.sums[0][0] >= 0, "activation would fire (+1)");

    let boolean = model.eval_boolean(&[true, false, true, true]).unwrap();
    assert_eq!(boolean.outputs[0], 3, "popcount");
    assert!(boolean.outputs[0] >= 5u32.div_ceil(2), "threshold bit 1");

    // Same neuron as a circuit, read through its count net and comparator.
    let mut circuit = Circuit::new(4);
    let outputs = build_bnn_module(&mut circuit, &model, &ModelFactorings::empty(&model)).unwrap();
    let threshold_bit = circuit.count_ge_const(&outputs[0].clone(), 3);
    let trace = circuit.simulate(&[true, false, true, true]).unwrap();
    assert_eq!(trace.count_value(&outputs[0]), 3);
    assert!(trace.value(threshold_bit));

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "must run in under a second");
    println!(
        "criterion 1 PASS: im=1, bipolar +1, count 3, bit 1 in {:.3}s",
        elapsed.as_secs_f64()
    );
}

/// Criterion 2: 2*count - n equals the bipolar weighted sum for every pair
/// of bipolar vectors up to length 12, exhaustively and exactly.
#[test]
fn criterion2_count_identity_exhaustive() {
    let mut checked: u64 = 0;
    for n in 1..=12usize {
        for w_mask in 0..1u32 << n {
            for x_mask in 0..1u32 << n {
                let mut sum = 0i64;
                let mut count = 0u32;
                for b in 0..n {
                    let w = (w_mask >> b) & 1 == 1;
                    let x = (x_mask >> b) & 1 == 1;
                    sum += (bit_to_bipolar(w) * bit_to_bipolar(x)) as i64;
                    count += !(w ^ x) as u32;
                }
                assert_eq!(convert_domain(count, n as u32).unwrap(), sum);
                checked += 1;
            }
        }
    }
    println!("criterion 2 PASS: identity holds on {checked} exhaustive vector pairs");
}

/// Criterion 3: on 100 random models the pipeline verdict equals exhaustive
/// input enumeration, and every SAT witness replays through the reference
/// property evaluator.
#[test]
fn criterion3_pipeline_matches_enumeration() {
    let mut rng = gen::rng(1003);
    let backend = VarisatBackend;
    let mut sat_count = 0;
    for round in 0..100 {
        let dims = [
            rng.gen_range(4..=12usize),
            rng.gen_range(2..=8usize),
            rng.gen_range(2..=8usize),
            rng.gen_range(2..=4usize),
        ];
        let model = gen::random_model(&mut rng, &dims);
        let property = gen::random_property(
            &mut rng,
            dims[0],
            dims[3],
            model.output_fan_in(),
            2,
        );
        let (expected, _) = brute_force_verify(&model, &property).unwrap();
        let options = VerifyOptions {
            factoring: FactoringMode::Heuristic,
            timeout: None,
        };
        let report = verify(&model, &property, &options, &backend).unwrap();
        assert_eq!(report.verdict, expected, "round {round} dims {dims:?}");
        if report.verdict == Verdict::Sat {
            sat_count += 1;
            // verify() already replays the witness and fails otherwise;
            // assert the counterexample is exposed.
            let cex = report.counterexample.expect("SAT carries a witness");
            let bits: Vec<bool> = cex.input_bipolar.iter().map(|&v| v == 1).collect();
            let eval = model.eval_boolean(&bits).unwrap();
            assert!(eval_property(&property, &bits, &eval.outputs).unwrap());
        }
    }
    println!("criterion 3 PASS: 100/100 verdicts match enumeration ({sat_count} SAT, all replayed)");
}

/// Criterion 4: factored and unfactored circuits agree — exhaustively on
/// 100 random layers, and on 10^4 random vectors for a 3x50 model — and the
/// netlist strictly shrinks whenever the heuristic finds anything.
#[test]
fn criterion4_factoring_soundness() {
    let mut rng = gen::rng(1004);

    let mut nonempty = 0;
    for round in 0..100 {
        let neurons = rng.gen_range(2..=8usize);
        let d0 = rng.gen_range(3..=11usize);
        let model = gen::random_model(&mut rng, &[d0, neurons]);

        let plain = ModelFactorings::empty(&model);
        let factored = FactoringMode::Heuristic.strategy().factor_model(&model);

        let mut c_plain = Circuit::new(d0);
        let out_plain = build_bnn_module(&mut c_plain, &model, &plain).unwrap();
        let mut c_fact = Circuit::new(d0);
        let out_fact = build_bnn_module(&mut c_fact, &model, &factored).unwrap();

        for mask in 0..1u32 << d0 {
            let input: Vec<bool> = (0..d0).map(|b| mask >> b & 1 == 1).collect();
            let tp = c_plain.simulate(&input).unwrap();
            let tf = c_fact.simulate(&input).unwrap();
            for (a, b) in out_plain.iter().zip(&out_fact) {
                assert_eq!(tp.count_value(a), tf.count_value(b), "round {round}");
            }
        }
        if !factored.is_empty() {
            nonempty += 1;
            assert!(
                c_fact.gate_stats().logic() < c_plain.gate_stats().logic(),
                "round {round}: factoring must strictly reduce gates"
            );
        }
    }
    assert!(nonempty > 0, "random layers should factor sometimes");

    // One 3-layer x50 model on 10^4 random vectors.
    let model = gen::random_model(&mut rng, &[50, 50, 50, 50]);
    let plain = ModelFactorings::empty(&model);
    let factored = FactoringMode::Heuristic.strategy().factor_model(&model);
    assert!(!factored.is_empty(), "a 50x51 random layer always factors");

    let mut c_plain = Circuit::new(50);
    let out_plain = build_bnn_module(&mut c_plain, &model, &plain).unwrap();
    let mut c_fact = Circuit::new(50);
    let out_fact = build_bnn_module(&mut c_fact, &model, &factored).unwrap();
    for _ in 0..10_000 {
        let input = gen::random_bit_input(&mut rng, 50);
        let tp = c_plain.simulate(&input).unwrap();
        let tf = c_fact.simulate(&input).unwrap();
        for (a, b) in out_plain.iter().zip(&out_fact) {
            assert_eq!(tp.count_value(a), tf.count_value(b));
        }
    }
    assert!(c_fact.gate_stats().logic() < c_plain.gate_stats().logic());
    println!(
        "criterion 4 PASS: {nonempty}/100 layers factored with strict gate decrease; 3x50 model agrees on 10^4 vectors ({} vs {} gates)",
        c_fact.gate_stats().logic(),
        c_plain.gate_stats().logic()
    );
}

/// Criterion 5: heuristic outputs always satisfy the factoring definitions;
/// the two-factoring fixture's exhaustive optimum is 6 and the heuristic is
/// measured against it; the seed-expansion fixture returns saving 3.
#[test]
fn criterion5_heuristic_validity_and_fixtures() {
    // Definitional invariants on random layers.
    let mut rng = gen::rng(1005);
    for _ in 0..200 {
        let m = gen::random_matrix(&mut rng, rng.gen_range(2..=7), rng.gen_range(1..=8));
        let set = find_factorings(&m);
        set.check_against(&m).unwrap();
        for f in set.factorings() {
            assert!(f.neurons.len() > 1);
        }
        for (i, a) in set.factorings().iter().enumerate() {
            for b in &set.factorings()[i + 1..] {
                assert!(bnnsat::factoring::non_overlapping(a, b));
            }
        }
    }

    // Two-factoring worked fixture: rows 1,2 agree on columns {0,2}; rows
    // 2,3 agree on columns {1,3,4,5} (1-based as in the worked example).
    let fig2 = WeightMatrix::from_bits(vec![
        vec![false, true, false, true, true, true],
        vec![false, false, false, false, false, false],
        vec![true, false, true, false, false, false],
    ])
    .unwrap();
    let (_, optimal) = brute_force_optimal_factorings(&fig2, 2).unwrap();
    assert_eq!(optimal, 6, "exhaustive 2-factoring optimum");
    let heuristic = find_factorings(&fig2);
    heuristic.check_against(&fig2).unwrap();
    assert_eq!(heuristic.total_saving(), 6, "heuristic reaches the optimum here");

    // Seed-expansion fixture: expanding the top-left cell yields saving 3.
    let fig3 = WeightMatrix::from_bits(vec![
        vec![false, false, false, false],
        vec![false, true, false, false],
        vec![true, false, true, false],
        vec![true, true, true, true],
    ])
    .unwrap();
    let f = get_factoring(&fig3, 0, 0, &Default::default()).unwrap();
    assert_eq!(f.saving(), 3);

    println!(
        "criterion 5 PASS: invariants hold; fixture optimum 6 (heuristic 6), seed expansion saving 3"
    );
}

/// Criterion 6: on 50 random bipartite graphs the exhaustive biclique edge
/// count equals the best factoring through the always-connected extra row
/// of the reduced matrix.
#[test]
fn criterion6_biclique_equality() {
    let mut rng = gen::rng(1006);
    for round in 0..50 {
        let left = 1 + round % 6;
        let right = 1 + (round * 7 / 10) % 6;
        let graph = gen::random_bipartite(&mut rng, left, right, 1, 2);
        let (_, _, edges) = brute_force_max_edge_biclique(&graph).unwrap();
        assert!(graph.edge_count() >= 1);

        let matrix = reduce_meb_to_factoring(&graph).unwrap();
        let saving = brute_force_optimal_factoring_containing(&matrix, reduced_extra_row(&graph))
            .unwrap()
            .map(|(_, s)| s)
            .unwrap_or(0);
        assert_eq!(edges, saving, "round {round}: {graph:?}");
    }
    println!("criterion 6 PASS: 50/50 graphs satisfy MEB = reduced-layer factoring saving");
}

/// Criterion 7: on 100 random 3-CNFs the pipeline verdict on the reduced
/// instance equals satisfiability by enumeration, and decoded witnesses
/// satisfy the source formula.
#[test]
fn criterion7_sat3_round_trip() {
    let mut rng = gen::rng(1007);
    let backend = VarisatBackend;
    let mut sat_count = 0;
    for round in 0..100 {
        let m = rng.gen_range(1..=10usize);
        let n = rng.gen_range(1..=15usize);
        let instance = gen::random_cnf3(&mut rng, m, n);
        let expected = instance.enumerate_satisfiable().is_some();

        let (model, property) = sat3_to_bnn(&instance).unwrap();
        let miter = build_miter(&model, &property, &ModelFactorings::empty(&model)).unwrap();
        let cnf = tseitin_encode(&miter).unwrap();
        let result = solve(&cnf, &backend, None).unwrap();
        assert_eq!(
            result.verdict == Verdict::Sat,
            expected,
            "round {round}: m={m} n={n}"
        );
        if result.verdict == Verdict::Sat {
            sat_count += 1;
            let bipolar = decode_counterexample(&result, &cnf).unwrap();
            let assignment = decode_sat3_witness(&instance, &bipolar).unwrap();
            assert!(
                instance.is_satisfied_by(&assignment),
                "round {round}: decoded witness must satisfy the formula"
            );
        }
    }
    println!("criterion 7 PASS: 100/100 verdicts match ({sat_count} SAT, all witnesses satisfy)");
}

/// Criterion 8: a 784-input 3x100 model encodes to DIMACS in both variants
/// and the factored CNF is strictly smaller in variables and clauses. The
/// verdict itself is not asserted.
#[test]
fn criterion8_desk_scale_encoding() {
    let mut rng = gen::rng(1008);
    let model = gen::random_model(&mut rng, &[784, 100, 100, 100, 10]);
    let property = parse_property("out[1] >= 90 && out[2] >= 90").unwrap();

    let plain = ModelFactorings::empty(&model);
    let miter_plain = build_miter(&model, &property, &plain).unwrap();
    let cnf_plain = tseitin_encode(&miter_plain).unwrap();
    let dimacs_plain_len = emit_dimacs(&cnf_plain).len();

    let strategy = PartitionedFactoring::default();
    let factored = strategy.factor_model(&model);
    assert!(!factored.is_empty());
    let miter_fact = build_miter(&model, &property, &factored).unwrap();
    let cnf_fact = tseitin_encode(&miter_fact).unwrap();
    let dimacs_fact_len = emit_dimacs(&cnf_fact).len();

    assert!(
        cnf_fact.var_count() < cnf_plain.var_count(),
        "factored variables {} must undercut {}",
        cnf_fact.var_count(),
        cnf_plain.var_count()
    );
    assert!(
        cnf_fact.clauses().len() < cnf_plain.clauses().len(),
        "factored clauses {} must undercut {}",
        cnf_fact.clauses().len(),
        cnf_plain.clauses().len()
    );
    println!(
        "criterion 8 PASS: saving {}; vars {} -> {}, clauses {} -> {} (DIMACS {} -> {} bytes)",
        factored.total_saving(),
        cnf_plain.var_count(),
        cnf_fact.var_count(),
        cnf_plain.clauses().len(),
        cnf_fact.clauses().len(),
        dimacs_plain_len,
        dimacs_fact_len
    );
}
