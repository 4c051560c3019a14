//! Miter construction: neuron modules, network wiring, shared counters and
//! the property module.
//!
//! Every neuron module XNORs its inputs against constant weights (folded to
//! wires and inverters), sums the bits in a balanced adder tree and compares
//! against the activation threshold. A shared counter materializes the
//! popcount of one factoring's column set once; each subscribing neuron adds
//! the resulting binary count into its own tree instead of recounting. The
//! miter's single output is the property module's bit: a satisfying input is
//! exactly a risk witness.

use std::collections::BTreeSet;

use crate::factoring::{Factoring, ModelFactorings};
use crate::model::{BnnModel, WeightMatrix};
use crate::property::{Property, Relation};

use super::{Circuit, CircuitError, CountBits, Net};

/// A popcount shared by all neurons of one factoring.
pub struct SharedCounter {
    /// Subscribing neuron rows (the factoring's `I`).
    pub neurons: BTreeSet<usize>,
    /// Covered input columns (the factoring's `J`).
    pub inputs: BTreeSet<usize>,
    /// The shared weight slice over `inputs`, identical for every subscriber.
    pub weights: Vec<bool>,
    /// Binary count of the shared XNOR bits.
    pub count: CountBits,
}

/// Build the popcount for one factoring over the layer's input nets.
pub fn build_shared_counter(
    circuit: &mut Circuit,
    layer_inputs: &[Net],
    weights: &WeightMatrix,
    factoring: &Factoring,
) -> Result<SharedCounter, CircuitError> {
    factoring.check_against(weights)?;
    if let Some(&col) = factoring.inputs.iter().find(|&&j| j >= layer_inputs.len()) {
        return Err(CircuitError::CounterOutOfRange {
            col,
            fan_in: layer_inputs.len(),
        });
    }
    let row = *factoring.neurons.iter().next().expect("|I| > 1");
    let mut slice = Vec::with_capacity(factoring.inputs.len());
    let mut operands = Vec::with_capacity(factoring.inputs.len());
    for &j in &factoring.inputs {
        let weight = weights.bit(row, j);
        slice.push(weight);
        let w = circuit.constant(weight);
        let bit = circuit.xnor(layer_inputs[j], w);
        operands.push(circuit.bit_count(bit));
    }
    let count = circuit.count_ones(operands);
    Ok(SharedCounter {
        neurons: factoring.neurons.clone(),
        inputs: factoring.inputs.clone(),
        weights: slice,
        count,
    })
}

/// Popcount of one neuron: private XNOR bits for columns not covered by any
/// subscribed counter, plus the counters' binary counts.
pub fn build_neuron_count(
    circuit: &mut Circuit,
    layer_inputs: &[Net],
    weights_row: &[bool],
    neuron: usize,
    shared: &[&SharedCounter],
) -> Result<CountBits, CircuitError> {
    let fan_in = weights_row.len();
    let mut covered = vec![false; fan_in];
    for counter in shared {
        for &j in &counter.inputs {
            if j >= fan_in {
                return Err(CircuitError::CounterOutOfRange { col: j, fan_in });
            }
            if covered[j] {
                return Err(CircuitError::CounterOverlap(j));
            }
            covered[j] = true;
        }
        for (&j, &w) in counter.inputs.iter().zip(&counter.weights) {
            if weights_row[j] != w {
                return Err(CircuitError::SharedWeightMismatch { neuron, col: j });
            }
        }
    }
    let mut operands = Vec::new();
    for (j, &weight) in weights_row.iter().enumerate() {
        if covered[j] {
            continue;
        }
        let w = circuit.constant(weight);
        let bit = circuit.xnor(layer_inputs[j], w);
        operands.push(circuit.bit_count(bit));
    }
    for counter in shared {
        operands.push(counter.count.clone());
    }
    Ok(circuit.count_ones(operands))
}

/// Full neuron module: popcount plus the activation comparator
/// `count >= ceil(fan_in / 2)`.
pub fn build_neuron_module(
    circuit: &mut Circuit,
    layer_inputs: &[Net],
    weights_row: &[bool],
    neuron: usize,
    shared: &[&SharedCounter],
) -> Result<Net, CircuitError> {
    let count = build_neuron_count(circuit, layer_inputs, weights_row, neuron, shared)?;
    let threshold = (weights_row.len() as u64).div_ceil(2);
    Ok(circuit.count_ge_const(&count, threshold))
}

/// Wire the whole network: bias nets tied to constant 1, layer outputs fed
/// forward, one shared counter per factoring. Returns the output layer's
/// count nets (the output layer omits the activation).
pub fn build_bnn_module(
    circuit: &mut Circuit,
    model: &BnnModel,
    factorings: &ModelFactorings,
) -> Result<Vec<CountBits>, CircuitError> {
    if factorings.per_layer.len() != model.layer_count() {
        return Err(CircuitError::LayerCountMismatch {
            expected: model.layer_count(),
            got: factorings.per_layer.len(),
        });
    }
    let mut signals: Vec<Net> = circuit.inputs();
    for (l, weights) in model.layers().iter().enumerate() {
        let bias = circuit.constant(true);
        let mut layer_inputs = Vec::with_capacity(weights.cols());
        layer_inputs.push(bias);
        layer_inputs.extend_from_slice(&signals);

        let counters: Vec<SharedCounter> = factorings.per_layer[l]
            .factorings()
            .iter()
            .map(|f| build_shared_counter(circuit, &layer_inputs, weights, f))
            .collect::<Result<_, _>>()?;

        let last = l + 1 == model.layer_count();
        if last {
            let mut outputs = Vec::with_capacity(weights.rows());
            for i in 0..weights.rows() {
                let subscribed: Vec<&SharedCounter> =
                    counters.iter().filter(|c| c.neurons.contains(&i)).collect();
                let count =
                    build_neuron_count(circuit, &layer_inputs, weights.row(i), i, &subscribed)?;
                outputs.push(count);
            }
            for (i, count) in outputs.iter().enumerate() {
                circuit.counts.push((format!("out{}", i + 1), count.clone()));
            }
            return Ok(outputs);
        }
        let mut next = Vec::with_capacity(weights.rows());
        for i in 0..weights.rows() {
            let subscribed: Vec<&SharedCounter> =
                counters.iter().filter(|c| c.neurons.contains(&i)).collect();
            let bit =
                build_neuron_module(circuit, &layer_inputs, weights.row(i), i, &subscribed)?;
            next.push(bit);
        }
        signals = next;
    }
    unreachable!("models have at least one layer")
}

/// Property module over the miter's primary inputs and the BNN module's
/// output counts; the returned net is 1 exactly when the property holds.
pub fn build_property_module(
    circuit: &mut Circuit,
    property: &Property,
    inputs: &[Net],
    outputs: &[CountBits],
) -> Result<Net, CircuitError> {
    property.validate(inputs.len(), outputs.len())?;
    Ok(build_property_net(circuit, property, inputs, outputs))
}

fn build_property_net(
    circuit: &mut Circuit,
    property: &Property,
    inputs: &[Net],
    outputs: &[CountBits],
) -> Net {
    match property {
        Property::OutputAtom {
            index,
            relation,
            bound,
        } => {
            let count = &outputs[*index];
            let bound = *bound as u64;
            match relation {
                Relation::Ge => circuit.count_ge_const(count, bound),
                Relation::Gt => circuit.count_ge_const(count, bound + 1),
                Relation::Le => {
                    let gt = circuit.count_ge_const(count, bound + 1);
                    circuit.not(gt)
                }
                Relation::Lt => {
                    let ge = circuit.count_ge_const(count, bound);
                    circuit.not(ge)
                }
                Relation::Eq => {
                    let ge = circuit.count_ge_const(count, bound);
                    let gt = circuit.count_ge_const(count, bound + 1);
                    let not_gt = circuit.not(gt);
                    circuit.and(ge, not_gt)
                }
            }
        }
        Property::InputAtom { index, bit } => {
            let net = inputs[*index];
            if *bit {
                net
            } else {
                circuit.not(net)
            }
        }
        Property::Not(a) => {
            let inner = build_property_net(circuit, a, inputs, outputs);
            circuit.not(inner)
        }
        Property::And(a, b) => {
            let lhs = build_property_net(circuit, a, inputs, outputs);
            let rhs = build_property_net(circuit, b, inputs, outputs);
            circuit.and(lhs, rhs)
        }
        Property::Or(a, b) => {
            let lhs = build_property_net(circuit, a, inputs, outputs);
            let rhs = build_property_net(circuit, b, inputs, outputs);
            circuit.or(lhs, rhs)
        }
        Property::Implies(a, b) => {
            let lhs = build_property_net(circuit, a, inputs, outputs);
            let rhs = build_property_net(circuit, b, inputs, outputs);
            let not_lhs = circuit.not(lhs);
            circuit.or(not_lhs, rhs)
        }
    }
}

/// The combinational miter: BNN module plus property module, single output.
/// A satisfying input exhibits the risky behavior; if the CNF below is
/// unsatisfiable the network is safe with respect to the property.
pub fn build_miter(
    model: &BnnModel,
    property: &Property,
    factorings: &ModelFactorings,
) -> Result<Circuit, CircuitError> {
    let mut circuit = Circuit::new(model.input_dim());
    let outputs = build_bnn_module(&mut circuit, model, factorings)?;
    let inputs = circuit.inputs();
    let out = build_property_module(&mut circuit, property, &inputs, &outputs)?;
    circuit.set_output(out);
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factoring::{FactoringSet, GreedyFactoring, FactoringStrategy, NoFactoring};
    use crate::gen;
    use crate::model::{parse_model, BnnModel};
    use crate::property::{eval_property, parse_property};

    fn no_shared() -> Vec<&'static SharedCounter> {
        Vec::new()
    }

    #[test]
    fn worked_neuron_example() {
        // Weight bits 0 1 0 0 1 (bias first), input bits 1 0 1 1: XNOR row
        // is 0 1 1 0 1, count 3, and 3 >= ceil(5/2) fires the activation.
        let mut c = Circuit::new(4);
        let mut inputs = vec![c.constant(true)];
        inputs.extend(c.inputs());
        let row = [false, true, false, false, true];
        let out = build_neuron_module(&mut c, &inputs, &row, 0, &no_shared()).unwrap();
        c.set_output(out);
        assert!(c.simulate_output(&[true, false, true, true]).unwrap());

        let count = build_neuron_count(&mut c, &inputs, &row, 0, &no_shared()).unwrap();
        let trace = c.simulate(&[true, false, true, true]).unwrap();
        assert_eq!(trace.count_value(&count), 3);
    }

    #[test]
    fn bias_only_neuron_is_constant() {
        let mut c = Circuit::new(0);
        let inputs = vec![c.constant(true)];
        let out = build_neuron_module(&mut c, &inputs, &[true], 0, &no_shared()).unwrap();
        c.set_output(out);
        // count 1 >= ceil(1/2) regardless of anything.
        assert!(c.simulate_output(&[]).unwrap());
    }

    #[test]
    fn random_neurons_match_reference_exhaustively() {
        let mut rng = gen::rng(71);
        for _ in 0..30 {
            let bits = 3 + (rand::Rng::gen_range(&mut rng, 0..9) as usize);
            let model = gen::random_model(&mut rng, &[bits, 1]);
            let row = model.layer(0).row(0).to_vec();
            let mut c = Circuit::new(bits);
            let mut inputs = vec![c.constant(true)];
            inputs.extend(c.inputs());
            let count = build_neuron_count(&mut c, &inputs, &row, 0, &no_shared()).unwrap();
            let threshold = (row.len() as u64).div_ceil(2);
            let bit = c.count_ge_const(&count, threshold);
            for mask in 0..1u32 << bits {
                let input: Vec<bool> = (0..bits).map(|b| mask >> b & 1 == 1).collect();
                let eval = model.eval_boolean(&input).unwrap();
                let trace = c.simulate(&input).unwrap();
                assert_eq!(trace.count_value(&count) as u32, eval.outputs[0]);
                assert_eq!(trace.value(bit), eval.outputs[0] >= threshold as u32);
            }
        }
    }

    #[test]
    fn bnn_module_matches_reference_exhaustively() {
        let mut rng = gen::rng(72);
        for _ in 0..10 {
            let model = gen::random_model(&mut rng, &[4, 3, 2]);
            let empty = ModelFactorings::empty(&model);
            let mut c = Circuit::new(4);
            let outputs = build_bnn_module(&mut c, &model, &empty).unwrap();
            for mask in 0..16u32 {
                let input: Vec<bool> = (0..4).map(|b| mask >> b & 1 == 1).collect();
                let eval = model.eval_boolean(&input).unwrap();
                let trace = c.simulate(&input).unwrap();
                let got: Vec<u32> = outputs
                    .iter()
                    .map(|count| trace.count_value(count) as u32)
                    .collect();
                assert_eq!(got, eval.outputs);
            }
        }
    }

    #[test]
    fn factored_module_is_equivalent_and_smaller() {
        let mut rng = gen::rng(73);
        let mut sharing_seen = false;
        for _ in 0..10 {
            let model = gen::random_model(&mut rng, &[6, 5, 4, 2]);
            let plain = ModelFactorings::empty(&model);
            let factored = GreedyFactoring.factor_model(&model);

            let mut c_plain = Circuit::new(6);
            let out_plain = build_bnn_module(&mut c_plain, &model, &plain).unwrap();
            let mut c_fact = Circuit::new(6);
            let out_fact = build_bnn_module(&mut c_fact, &model, &factored).unwrap();

            for mask in 0..1u32 << 6 {
                let input: Vec<bool> = (0..6).map(|b| mask >> b & 1 == 1).collect();
                let tp = c_plain.simulate(&input).unwrap();
                let tf = c_fact.simulate(&input).unwrap();
                let vp: Vec<u64> = out_plain.iter().map(|c| tp.count_value(c)).collect();
                let vf: Vec<u64> = out_fact.iter().map(|c| tf.count_value(c)).collect();
                assert_eq!(vp, vf);
            }
            if !factored.is_empty() {
                sharing_seen = true;
                assert!(
                    c_fact.gate_stats().logic() < c_plain.gate_stats().logic(),
                    "sharing must shrink the netlist: {} vs {}",
                    c_fact.gate_stats(),
                    c_plain.gate_stats()
                );
            }
        }
        assert!(sharing_seen, "test models should produce some factoring");
    }

    #[test]
    fn rejects_factoring_that_disagrees_with_weights() {
        let model = gen::random_model(&mut gen::rng(74), &[4, 3]);
        let mut bad_set = FactoringSet::new();
        // Columns chosen so random 3x5 layers almost surely disagree; find
        // one that actually disagrees to keep the test deterministic.
        let weights = model.layer(0);
        let all: std::collections::BTreeSet<usize> = (0..weights.cols()).collect();
        let f = Factoring::new([0usize, 1, 2], all).unwrap();
        if f.check_against(weights).is_err() {
            bad_set.insert(f).unwrap();
            let bad = ModelFactorings {
                per_layer: vec![bad_set],
            };
            let mut c = Circuit::new(4);
            assert!(matches!(
                build_bnn_module(&mut c, &model, &bad),
                Err(CircuitError::InvalidFactoring(_))
            ));
        }
    }

    #[test]
    fn property_module_extremes() {
        let model = gen::random_model(&mut gen::rng(75), &[3, 2]);
        let fan_in = model.output_fan_in() as u32;
        let empty = ModelFactorings::empty(&model);

        let vacuous = parse_property("out[1] >= 0").unwrap();
        let miter = build_miter(&model, &vacuous, &empty).unwrap();
        let impossible =
            parse_property(&format!("out[1] >= {}", fan_in + 1)).unwrap();
        let miter_false = build_miter(&model, &impossible, &empty).unwrap();
        for mask in 0..8u32 {
            let input: Vec<bool> = (0..3).map(|b| mask >> b & 1 == 1).collect();
            assert!(miter.simulate_output(&input).unwrap());
            assert!(!miter_false.simulate_output(&input).unwrap());
        }
    }

    #[test]
    fn property_module_matches_reference_eval() {
        let mut rng = gen::rng(76);
        let model = gen::random_model(&mut rng, &[8, 6, 4]);
        let empty = ModelFactorings::empty(&model);
        let fan_in = model.output_fan_in();
        for _ in 0..100 {
            let property = gen::random_property(&mut rng, 8, 4, fan_in, 3);
            let miter = build_miter(&model, &property, &empty).unwrap();
            for _ in 0..10 {
                let input = gen::random_bit_input(&mut rng, 8);
                let eval = model.eval_boolean(&input).unwrap();
                let expected = eval_property(&property, &input, &eval.outputs).unwrap();
                assert_eq!(miter.simulate_output(&input).unwrap(), expected);
            }
        }
    }

    #[test]
    fn property_module_rejects_unknown_indices() {
        let model = gen::random_model(&mut gen::rng(77), &[3, 2]);
        let empty = ModelFactorings::empty(&model);
        let bad = parse_property("out[3] >= 1").unwrap();
        assert!(matches!(
            build_miter(&model, &bad, &empty),
            Err(CircuitError::Property(_))
        ));
        let bad_in = parse_property("in[4] == 1").unwrap();
        assert!(matches!(
            build_miter(&model, &bad_in, &empty),
            Err(CircuitError::Property(_))
        ));
    }

    #[test]
    fn miter_finds_enumerated_witness() {
        let mut rng = gen::rng(78);
        let model = gen::random_model(&mut rng, &[8, 4, 2]);
        let empty = ModelFactorings::empty(&model);
        // Pick a property with a known witness by enumeration.
        let fan_in = model.output_fan_in();
        let mut chosen = None;
        'outer: for _ in 0..50 {
            let property = gen::random_property(&mut rng, 8, 2, fan_in, 2);
            for mask in 0..256u32 {
                let input: Vec<bool> = (0..8).map(|b| mask >> b & 1 == 1).collect();
                let eval = model.eval_boolean(&input).unwrap();
                if eval_property(&property, &input, &eval.outputs).unwrap() {
                    chosen = Some((property, input));
                    break 'outer;
                }
            }
        }
        let (property, witness) = chosen.expect("some property has a witness");
        let miter = build_miter(&model, &property, &empty).unwrap();
        assert!(miter.simulate_output(&witness).unwrap());
    }

    #[test]
    fn table_style_model_round_trip_through_circuit() {
        // A single-neuron model in the text format, evaluated through the
        // miter against its own count.
        let text = "layers 1\ndims 4 1\nweights 1\n-1 1 -1 -1 1\n";
        let model = parse_model(text).unwrap();
        let property = parse_property("out[1] >= 3").unwrap();
        let empty = ModelFactorings::empty(&model);
        let miter = build_miter(&model, &property, &empty).unwrap();
        assert!(miter.simulate_output(&[true, false, true, true]).unwrap());
    }

    #[test]
    fn zero_layer_model_rejected_at_build() {
        assert!(BnnModel::new(vec![4], vec![]).is_err());
    }

    #[test]
    fn shared_counter_feeds_multiple_neurons() {
        // Two identical rows share their whole row count.
        let weights =
            WeightMatrix::from_bits(vec![vec![true, false, true], vec![true, false, true]])
                .unwrap();
        let factoring = Factoring::new([0usize, 1], [0usize, 1, 2]).unwrap();
        let mut c = Circuit::new(2);
        let mut inputs = vec![c.constant(true)];
        inputs.extend(c.inputs());
        let counter = build_shared_counter(&mut c, &inputs, &weights, &factoring).unwrap();
        for i in 0..2 {
            let bit = build_neuron_module(&mut c, &inputs, weights.row(i), i, &[&counter]);
            assert!(bit.is_ok());
        }
        // Overlapping counters on the same neuron are rejected.
        let same = build_shared_counter(&mut c, &inputs, &weights, &factoring).unwrap();
        assert!(matches!(
            build_neuron_count(&mut c, &inputs, weights.row(0), 0, &[&counter, &same]),
            Err(CircuitError::CounterOverlap(_))
        ));
    }

    #[test]
    fn unfactored_and_factored_gate_stats_on_no_factoring() {
        let model = gen::random_model(&mut gen::rng(79), &[5, 4, 2]);
        let strategy = NoFactoring;
        let factorings = strategy.factor_model(&model);
        let a = build_miter(
            &model,
            &parse_property("out[1] >= 1").unwrap(),
            &factorings,
        )
        .unwrap();
        let b = build_miter(
            &model,
            &parse_property("out[1] >= 1").unwrap(),
            &ModelFactorings::empty(&model),
        )
        .unwrap();
        assert_eq!(a.gate_stats(), b.gate_stats());
    }
}
