//! Gate-level netlists with a reference simulator.
//!
//! Circuits are built append-only: every gate's operands already exist when
//! the gate is created, so the gate list is its own topological order.
//! Constructors fold constants aggressively — XNOR against a constant weight
//! degenerates to a wire or an inverter, comparisons against extreme bounds
//! to constants — which keeps neuron modules small without a separate
//! optimization pass. Adders are first-class gates so popcount structure
//! stays visible in statistics; they decompose to primitive gates only for
//! CNF encoding.

use serde::Serialize;
use thiserror::Error;

pub mod build;

pub use build::{
    build_bnn_module, build_miter, build_neuron_count, build_neuron_module,
    build_property_module, build_shared_counter, SharedCounter,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("expected {expected} input bits, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid factoring for this layer: {0}")]
    InvalidFactoring(#[from] crate::factoring::FactoringError),
    #[error("shared counters overlap on input column {0}")]
    CounterOverlap(usize),
    #[error("shared counter references column {col} beyond fan-in {fan_in}")]
    CounterOutOfRange { col: usize, fan_in: usize },
    #[error("neuron {neuron} disagrees with its shared counter on column {col}")]
    SharedWeightMismatch { neuron: usize, col: usize },
    #[error("factoring sets cover {got} layers, model has {expected}")]
    LayerCountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Property(#[from] crate::property::PropertyError),
    #[error("circuit has no designated output")]
    NoOutput,
}

/// A wire in the netlist. Nets `0..input_count` are the primary inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Net(pub u32);

impl Net {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Gate kinds. Adders produce a sum on their primary output and a carry on
/// the auxiliary output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Const(bool),
    Not(Net),
    And(Net, Net),
    Or(Net, Net),
    Xor(Net, Net),
    Xnor(Net, Net),
    HalfAdder { a: Net, b: Net },
    FullAdder { a: Net, b: Net, c: Net },
}

impl Gate {
    fn operands(&self) -> Vec<Net> {
        match *self {
            Gate::Const(_) => vec![],
            Gate::Not(a) => vec![a],
            Gate::And(a, b) | Gate::Or(a, b) | Gate::Xor(a, b) | Gate::Xnor(a, b) => vec![a, b],
            Gate::HalfAdder { a, b } => vec![a, b],
            Gate::FullAdder { a, b, c } => vec![a, b, c],
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Gate::Const(_) => "const",
            Gate::Not(_) => "not",
            Gate::And(..) => "and",
            Gate::Or(..) => "or",
            Gate::Xor(..) => "xor",
            Gate::Xnor(..) => "xnor",
            Gate::HalfAdder { .. } => "half_adder",
            Gate::FullAdder { .. } => "full_adder",
        }
    }
}

/// One netlist row: a gate, its output net and, for adders, the carry net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateInst {
    pub op: Gate,
    pub out: Net,
    pub carry: Option<Net>,
}

/// A binary-encoded count: `bits` is LSB-first and the runtime value never
/// exceeds `max`, so the width is exactly `bit_width(max)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountBits {
    pub bits: Vec<Net>,
    pub max: u64,
}

impl CountBits {
    pub fn width(&self) -> usize {
        self.bits.len()
    }
}

pub fn bit_width(value: u64) -> usize {
    (64 - value.leading_zeros()) as usize
}

/// Gate counts by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GateStats {
    pub consts: usize,
    pub nots: usize,
    pub ands: usize,
    pub ors: usize,
    pub xors: usize,
    pub xnors: usize,
    pub half_adders: usize,
    pub full_adders: usize,
}

impl GateStats {
    pub fn total(&self) -> usize {
        self.consts
            + self.nots
            + self.ands
            + self.ors
            + self.xors
            + self.xnors
            + self.half_adders
            + self.full_adders
    }

    /// Gates that do counting work: everything except wiring constants.
    pub fn logic(&self) -> usize {
        self.total() - self.consts
    }
}

impl std::fmt::Display for GateStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} gates (not {}, and {}, or {}, xor {}, xnor {}, ha {}, fa {}, const {})",
            self.total(),
            self.nots,
            self.ands,
            self.ors,
            self.xors,
            self.xnors,
            self.half_adders,
            self.full_adders,
            self.consts
        )
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    input_count: usize,
    net_count: u32,
    gates: Vec<GateInst>,
    output: Option<Net>,
    const_nets: [Option<Net>; 2],
    /// Named count bundles, e.g. the output-layer counts of a BNN module.
    pub counts: Vec<(String, CountBits)>,
}

impl Circuit {
    pub fn new(input_count: usize) -> Circuit {
        Circuit {
            input_count,
            net_count: input_count as u32,
            gates: Vec::new(),
            output: None,
            const_nets: [None, None],
            counts: Vec::new(),
        }
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn net_count(&self) -> usize {
        self.net_count as usize
    }

    pub fn input(&self, i: usize) -> Net {
        assert!(i < self.input_count, "input index out of range");
        Net(i as u32)
    }

    pub fn inputs(&self) -> Vec<Net> {
        (0..self.input_count as u32).map(Net).collect()
    }

    pub fn gates(&self) -> &[GateInst] {
        &self.gates
    }

    pub fn output(&self) -> Option<Net> {
        self.output
    }

    pub fn set_output(&mut self, net: Net) {
        debug_assert!(net.0 < self.net_count);
        self.output = Some(net);
    }

    fn fresh(&mut self) -> Net {
        let net = Net(self.net_count);
        self.net_count += 1;
        net
    }

    fn push(&mut self, op: Gate) -> Net {
        debug_assert!(op.operands().iter().all(|n| n.0 < self.net_count));
        let out = self.fresh();
        self.gates.push(GateInst {
            op,
            out,
            carry: None,
        });
        out
    }

    fn is_const(&self, net: Net) -> Option<bool> {
        if self.const_nets[0] == Some(net) {
            Some(false)
        } else if self.const_nets[1] == Some(net) {
            Some(true)
        } else {
            None
        }
    }

    pub fn constant(&mut self, value: bool) -> Net {
        if let Some(net) = self.const_nets[value as usize] {
            return net;
        }
        let net = self.push(Gate::Const(value));
        self.const_nets[value as usize] = Some(net);
        net
    }

    pub fn not(&mut self, a: Net) -> Net {
        match self.is_const(a) {
            Some(v) => self.constant(!v),
            None => self.push(Gate::Not(a)),
        }
    }

    pub fn and(&mut self, a: Net, b: Net) -> Net {
        if a == b {
            return a;
        }
        match (self.is_const(a), self.is_const(b)) {
            (Some(false), _) | (_, Some(false)) => self.constant(false),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ => self.push(Gate::And(a, b)),
        }
    }

    pub fn or(&mut self, a: Net, b: Net) -> Net {
        if a == b {
            return a;
        }
        match (self.is_const(a), self.is_const(b)) {
            (Some(true), _) | (_, Some(true)) => self.constant(true),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ => self.push(Gate::Or(a, b)),
        }
    }

    pub fn xor(&mut self, a: Net, b: Net) -> Net {
        if a == b {
            return self.constant(false);
        }
        match (self.is_const(a), self.is_const(b)) {
            (Some(false), _) => b,
            (_, Some(false)) => a,
            (Some(true), _) => self.not(b),
            (_, Some(true)) => self.not(a),
            _ => self.push(Gate::Xor(a, b)),
        }
    }

    /// XNOR with a constant weight folds to a wire (weight 1) or an inverter
    /// (weight 0).
    pub fn xnor(&mut self, a: Net, b: Net) -> Net {
        if a == b {
            return self.constant(true);
        }
        match (self.is_const(a), self.is_const(b)) {
            (Some(true), _) => b,
            (_, Some(true)) => a,
            (Some(false), _) => self.not(b),
            (_, Some(false)) => self.not(a),
            _ => self.push(Gate::Xnor(a, b)),
        }
    }

    pub fn half_adder(&mut self, a: Net, b: Net) -> (Net, Net) {
        match (self.is_const(a), self.is_const(b)) {
            (Some(false), _) => return (b, self.constant(false)),
            (_, Some(false)) => return (a, self.constant(false)),
            (Some(true), _) => return (self.not(b), b),
            (_, Some(true)) => return (self.not(a), a),
            _ => {}
        }
        let sum = self.fresh();
        let carry = self.fresh();
        self.gates.push(GateInst {
            op: Gate::HalfAdder { a, b },
            out: sum,
            carry: Some(carry),
        });
        (sum, carry)
    }

    pub fn full_adder(&mut self, a: Net, b: Net, c: Net) -> (Net, Net) {
        let mut vars = Vec::new();
        let mut ones = 0u32;
        for net in [a, b, c] {
            match self.is_const(net) {
                Some(true) => ones += 1,
                Some(false) => {}
                None => vars.push(net),
            }
        }
        match (vars.len(), ones) {
            (3, 0) => {
                let sum = self.fresh();
                let carry = self.fresh();
                self.gates.push(GateInst {
                    op: Gate::FullAdder {
                        a: vars[0],
                        b: vars[1],
                        c: vars[2],
                    },
                    out: sum,
                    carry: Some(carry),
                });
                (sum, carry)
            }
            (2, 0) => self.half_adder(vars[0], vars[1]),
            (2, 1) => (self.xnor(vars[0], vars[1]), self.or(vars[0], vars[1])),
            (1, 0) => (vars[0], self.constant(false)),
            (1, 1) => (self.not(vars[0]), vars[0]),
            (1, 2) => (vars[0], self.constant(true)),
            (0, k) => (self.constant(k % 2 == 1), self.constant(k >= 2)),
            _ => unreachable!(),
        }
    }

    /// Sum of one-bit operands: parity XOR for the last position of a
    /// bounded-width addition, where the carry is provably zero.
    fn xor_all(&mut self, nets: &[Net]) -> Net {
        let mut acc = self.constant(false);
        for &n in nets {
            acc = self.xor(acc, n);
        }
        acc
    }

    /// Ripple-add two counts; the result width is pinned by `max`, so the
    /// top carry is never materialized.
    pub fn add_counts(&mut self, a: &CountBits, b: &CountBits) -> CountBits {
        let max = a.max + b.max;
        let width = bit_width(max);
        let mut bits = Vec::with_capacity(width);
        let mut carry: Option<Net> = None;
        for pos in 0..width {
            let mut ops: Vec<Net> = Vec::with_capacity(3);
            if let Some(&bit) = a.bits.get(pos) {
                ops.push(bit);
            }
            if let Some(&bit) = b.bits.get(pos) {
                ops.push(bit);
            }
            if let Some(c) = carry.take() {
                ops.push(c);
            }
            let last = pos + 1 == width;
            let bit = match (ops.len(), last) {
                (0, _) => self.constant(false),
                (1, _) => ops[0],
                (_, true) => self.xor_all(&ops),
                (2, false) => {
                    let (s, c) = self.half_adder(ops[0], ops[1]);
                    carry = Some(c);
                    s
                }
                (3, false) => {
                    let (s, c) = self.full_adder(ops[0], ops[1], ops[2]);
                    carry = Some(c);
                    s
                }
                _ => unreachable!(),
            };
            bits.push(bit);
        }
        CountBits { bits, max }
    }

    /// Balanced adder tree over a mix of single bits and precomputed counts:
    /// repeatedly merge the two smallest operands.
    pub fn count_ones(&mut self, operands: Vec<CountBits>) -> CountBits {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;

        let mut heap: BinaryHeap<Reverse<(u64, u64)>> = BinaryHeap::new();
        let mut slots: Vec<Option<CountBits>> = Vec::new();
        for count in operands {
            if count.max == 0 {
                continue;
            }
            heap.push(Reverse((count.max, slots.len() as u64)));
            slots.push(Some(count));
        }
        if heap.is_empty() {
            return CountBits {
                bits: Vec::new(),
                max: 0,
            };
        }
        while heap.len() > 1 {
            let Reverse((_, ia)) = heap.pop().unwrap();
            let Reverse((_, ib)) = heap.pop().unwrap();
            let a = slots[ia as usize].take().unwrap();
            let b = slots[ib as usize].take().unwrap();
            let merged = self.add_counts(&a, &b);
            heap.push(Reverse((merged.max, slots.len() as u64)));
            slots.push(Some(merged));
        }
        let Reverse((_, idx)) = heap.pop().unwrap();
        slots[idx as usize].take().unwrap()
    }

    /// Single bit as a count in `0..=1`.
    pub fn bit_count(&self, net: Net) -> CountBits {
        CountBits {
            bits: vec![net],
            max: 1,
        }
    }

    /// Comparator `count >= bound` against a constant bound.
    pub fn count_ge_const(&mut self, count: &CountBits, bound: u64) -> Net {
        if bound == 0 {
            return self.constant(true);
        }
        if bound > count.max {
            return self.constant(false);
        }
        let mut gt = self.constant(false);
        let mut eq = self.constant(true);
        for pos in (0..count.width()).rev() {
            let bit = count.bits[pos];
            if bound >> pos & 1 == 0 {
                let here = self.and(eq, bit);
                gt = self.or(gt, here);
                let not_bit = self.not(bit);
                eq = self.and(eq, not_bit);
            } else {
                eq = self.and(eq, bit);
            }
        }
        self.or(gt, eq)
    }

    pub fn gate_stats(&self) -> GateStats {
        let mut stats = GateStats::default();
        for inst in &self.gates {
            match inst.op {
                Gate::Const(_) => stats.consts += 1,
                Gate::Not(_) => stats.nots += 1,
                Gate::And(..) => stats.ands += 1,
                Gate::Or(..) => stats.ors += 1,
                Gate::Xor(..) => stats.xors += 1,
                Gate::Xnor(..) => stats.xnors += 1,
                Gate::HalfAdder { .. } => stats.half_adders += 1,
                Gate::FullAdder { .. } => stats.full_adders += 1,
            }
        }
        stats
    }

    /// Evaluate every net for the given input assignment.
    pub fn simulate(&self, inputs: &[bool]) -> Result<SimTrace, CircuitError> {
        if inputs.len() != self.input_count {
            return Err(CircuitError::WidthMismatch {
                expected: self.input_count,
                got: inputs.len(),
            });
        }
        let mut values = vec![false; self.net_count as usize];
        values[..inputs.len()].copy_from_slice(inputs);
        for inst in &self.gates {
            match inst.op {
                Gate::Const(c) => values[inst.out.index()] = c,
                Gate::Not(a) => values[inst.out.index()] = !values[a.index()],
                Gate::And(a, b) => {
                    values[inst.out.index()] = values[a.index()] & values[b.index()]
                }
                Gate::Or(a, b) => {
                    values[inst.out.index()] = values[a.index()] | values[b.index()]
                }
                Gate::Xor(a, b) => {
                    values[inst.out.index()] = values[a.index()] ^ values[b.index()]
                }
                Gate::Xnor(a, b) => {
                    values[inst.out.index()] = !(values[a.index()] ^ values[b.index()])
                }
                Gate::HalfAdder { a, b } => {
                    let (x, y) = (values[a.index()], values[b.index()]);
                    values[inst.out.index()] = x ^ y;
                    values[inst.carry.unwrap().index()] = x & y;
                }
                Gate::FullAdder { a, b, c } => {
                    let (x, y, z) = (values[a.index()], values[b.index()], values[c.index()]);
                    values[inst.out.index()] = x ^ y ^ z;
                    values[inst.carry.unwrap().index()] = (x & y) | (z & (x ^ y));
                }
            }
        }
        Ok(SimTrace { values })
    }

    /// Simulate and read the designated output bit.
    pub fn simulate_output(&self, inputs: &[bool]) -> Result<bool, CircuitError> {
        let output = self.output.ok_or(CircuitError::NoOutput)?;
        Ok(self.simulate(inputs)?.value(output))
    }

    /// Debug netlist dump: one `net = kind(operands)` line per gate.
    pub fn render_netlist(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        writeln!(out, "inputs {}", self.input_count).unwrap();
        for inst in &self.gates {
            let ops: Vec<String> = inst.op.operands().iter().map(|n| n.0.to_string()).collect();
            match (inst.op, inst.carry) {
                (Gate::Const(v), _) => {
                    writeln!(out, "{} = const {}", inst.out.0, v as u8).unwrap()
                }
                (_, Some(carry)) => writeln!(
                    out,
                    "{},{} = {}({})",
                    inst.out.0,
                    carry.0,
                    inst.op.kind(),
                    ops.join(",")
                )
                .unwrap(),
                (_, None) => {
                    writeln!(out, "{} = {}({})", inst.out.0, inst.op.kind(), ops.join(","))
                        .unwrap()
                }
            }
        }
        if let Some(output) = self.output {
            writeln!(out, "output {}", output.0).unwrap();
        }
        out
    }
}

/// All net values of one simulation run.
pub struct SimTrace {
    values: Vec<bool>,
}

impl SimTrace {
    pub fn value(&self, net: Net) -> bool {
        self.values[net.index()]
    }

    pub fn count_value(&self, count: &CountBits) -> u64 {
        count
            .bits
            .iter()
            .enumerate()
            .map(|(pos, &bit)| (self.value(bit) as u64) << pos)
            .sum()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_folding_basics() {
        let mut c = Circuit::new(1);
        let x = c.input(0);
        let t = c.constant(true);
        let f = c.constant(false);
        assert_eq!(c.and(x, t), x);
        assert_eq!(c.or(x, f), x);
        assert_eq!(c.and(x, f), f);
        assert_eq!(c.xnor(x, t), x);
        assert_eq!(c.xor(x, x), f);
        let inv = c.xnor(x, f);
        let trace = c.simulate(&[true]).unwrap();
        assert!(!trace.value(inv));
    }

    #[test]
    fn adder_tree_counts_exhaustively() {
        for width in 1..=12usize {
            let mut c = Circuit::new(width);
            let operands: Vec<CountBits> = (0..width).map(|i| c.bit_count(c.input(i))).collect();
            let count = c.count_ones(operands);
            assert_eq!(count.width(), bit_width(width as u64));
            for mask in 0..1u32 << width {
                let inputs: Vec<bool> = (0..width).map(|b| mask >> b & 1 == 1).collect();
                let trace = c.simulate(&inputs).unwrap();
                assert_eq!(trace.count_value(&count), mask.count_ones() as u64);
            }
        }
    }

    #[test]
    fn comparator_exhaustive() {
        // Drive the comparator with a raw binary count from input nets.
        for n in 1..=16u64 {
            let width = bit_width(n);
            for bound in 0..=n + 1 {
                let mut c = Circuit::new(width);
                let count = CountBits {
                    bits: (0..width).map(|i| c.input(i)).collect(),
                    max: n,
                };
                let ge = c.count_ge_const(&count, bound);
                c.set_output(ge);
                for value in 0..=n {
                    let inputs: Vec<bool> = (0..width).map(|b| value >> b & 1 == 1).collect();
                    assert_eq!(
                        c.simulate_output(&inputs).unwrap(),
                        value >= bound,
                        "n={n} bound={bound} value={value}"
                    );
                }
            }
        }
    }

    #[test]
    fn mixed_width_addition() {
        // Merge a 3-bit count with single bits and check all values.
        let mut c = Circuit::new(6);
        let low: Vec<CountBits> = (0..4).map(|i| c.bit_count(c.input(i))).collect();
        let sub = c.count_ones(low);
        let rest: Vec<CountBits> = (4..6).map(|i| c.bit_count(c.input(i))).collect();
        let mut all = vec![sub];
        all.extend(rest);
        let total = c.count_ones(all);
        for mask in 0..1u32 << 6 {
            let inputs: Vec<bool> = (0..6).map(|b| mask >> b & 1 == 1).collect();
            let trace = c.simulate(&inputs).unwrap();
            assert_eq!(trace.count_value(&total), mask.count_ones() as u64);
        }
    }

    #[test]
    fn simulate_rejects_wrong_width() {
        let c = Circuit::new(3);
        assert!(matches!(
            c.simulate(&[true, false]),
            Err(CircuitError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn netlist_dump_mentions_all_gates() {
        let mut c = Circuit::new(2);
        let (a, b) = (c.input(0), c.input(1));
        let (s, _carry) = c.half_adder(a, b);
        c.set_output(s);
        let dump = c.render_netlist();
        assert!(dump.contains("half_adder(0,1)"));
        assert!(dump.contains("output"));
    }
}
