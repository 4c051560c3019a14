//! Inter-neuron factoring: sets of neurons that share identical weight
//! slices, so one popcount over the shared columns can feed all of them.
//!
//! A factoring `(I, J)` names neuron rows `I` (at least two) that agree on
//! every input column in `J`; its saving `(|I|-1)*|J|` counts the redundant
//! weight operations removed. Finding a maximum-saving factoring is NP-hard
//! (it embeds maximum edge biclique), hence the greedy heuristic in
//! [`greedy`], the block-partitioned variant in [`partition`], and the
//! exponential oracles in [`brute`] used by the test suites.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{BnnModel, WeightMatrix};

pub mod bipartite;
pub mod brute;
pub mod greedy;
pub mod partition;
pub mod strategy;

pub use strategy::{
    FactoringMode, FactoringStrategy, GreedyFactoring, NoFactoring, PartitionedFactoring,
    StrategyRegistry,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FactoringError {
    #[error("factoring must cover at least two neurons")]
    TooFewNeurons,
    #[error("factoring overlaps an already covered weight cell ({0}, {1})")]
    Overlap(usize, usize),
    #[error("rows of I disagree on column {0}")]
    Disagreement(usize),
    #[error("factoring references row {row} / column {col} outside a {rows}x{cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("instance too large for the exhaustive oracle ({0})")]
    InstanceTooLarge(String),
}

/// A factoring `f = (I, J)`: neuron rows `I` sharing identical weights on
/// input columns `J`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Factoring {
    pub neurons: BTreeSet<usize>,
    pub inputs: BTreeSet<usize>,
}

impl Factoring {
    pub fn new(
        neurons: impl IntoIterator<Item = usize>,
        inputs: impl IntoIterator<Item = usize>,
    ) -> Result<Factoring, FactoringError> {
        let factoring = Factoring {
            neurons: neurons.into_iter().collect(),
            inputs: inputs.into_iter().collect(),
        };
        if factoring.neurons.len() < 2 {
            return Err(FactoringError::TooFewNeurons);
        }
        Ok(factoring)
    }

    /// `(|I| - 1) * |J|`: redundant count operations removed.
    pub fn saving(&self) -> u64 {
        (self.neurons.len() as u64 - 1) * self.inputs.len() as u64
    }

    /// Weight cells `I x J` covered by this factoring.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neurons
            .iter()
            .flat_map(|&i| self.inputs.iter().map(move |&j| (i, j)))
    }

    /// Check the defining weight agreement against a concrete matrix.
    pub fn check_against(&self, weights: &WeightMatrix) -> Result<(), FactoringError> {
        for (i, j) in self.cells() {
            if i >= weights.rows() || j >= weights.cols() {
                return Err(FactoringError::OutOfRange {
                    row: i,
                    col: j,
                    rows: weights.rows(),
                    cols: weights.cols(),
                });
            }
        }
        let first = *self.neurons.iter().next().expect("|I| > 1");
        for &j in &self.inputs {
            let bit = weights.bit(first, j);
            if self.neurons.iter().any(|&i| weights.bit(i, j) != bit) {
                return Err(FactoringError::Disagreement(j));
            }
        }
        Ok(())
    }
}

/// True iff the two factorings cover disjoint weight cells.
pub fn non_overlapping(a: &Factoring, b: &Factoring) -> bool {
    // Cells collide exactly when both the neuron sets and the input sets
    // intersect.
    a.neurons.intersection(&b.neurons).next().is_none()
        || a.inputs.intersection(&b.inputs).next().is_none()
}

/// A set of pairwise non-overlapping factorings for one layer, plus the
/// weight cells they cover.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FactoringSet {
    factorings: Vec<Factoring>,
    used: BTreeSet<(usize, usize)>,
}

impl FactoringSet {
    pub fn new() -> FactoringSet {
        FactoringSet::default()
    }

    pub fn insert(&mut self, factoring: Factoring) -> Result<(), FactoringError> {
        if factoring.neurons.len() < 2 {
            return Err(FactoringError::TooFewNeurons);
        }
        for cell in factoring.cells() {
            if self.used.contains(&cell) {
                return Err(FactoringError::Overlap(cell.0, cell.1));
            }
        }
        self.used.extend(factoring.cells());
        self.factorings.push(factoring);
        Ok(())
    }

    pub fn factorings(&self) -> &[Factoring] {
        &self.factorings
    }

    pub fn used(&self) -> &BTreeSet<(usize, usize)> {
        &self.used
    }

    pub fn is_empty(&self) -> bool {
        self.factorings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.factorings.len()
    }

    pub fn total_saving(&self) -> u64 {
        self.factorings.iter().map(Factoring::saving).sum()
    }

    /// Re-check every invariant directly against a weight matrix: per-set
    /// agreement, `|I| > 1`, pairwise non-overlap and the used-cell union.
    pub fn check_against(&self, weights: &WeightMatrix) -> Result<(), FactoringError> {
        let mut cells = BTreeSet::new();
        for f in &self.factorings {
            f.check_against(weights)?;
            for cell in f.cells() {
                if !cells.insert(cell) {
                    return Err(FactoringError::Overlap(cell.0, cell.1));
                }
            }
        }
        if cells != self.used {
            return Err(FactoringError::Overlap(usize::MAX, usize::MAX));
        }
        Ok(())
    }
}

/// Factorings for every layer of a model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ModelFactorings {
    pub per_layer: Vec<FactoringSet>,
}

impl ModelFactorings {
    /// No factoring for any of the model's layers.
    pub fn empty(model: &BnnModel) -> ModelFactorings {
        ModelFactorings {
            per_layer: vec![FactoringSet::new(); model.layer_count()],
        }
    }

    pub fn total_saving(&self) -> u64 {
        self.per_layer.iter().map(FactoringSet::total_saving).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.per_layer.iter().all(FactoringSet::is_empty)
    }
}

/// Text report listing per-layer factorings as `(layer, I, J, saving)` rows
/// plus totals; the format consumed by the `factor` CLI command.
pub fn render_report(factorings: &ModelFactorings) -> String {
    let mut out = String::new();
    let fmt_set = |s: &BTreeSet<usize>| {
        let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        format!("{{{}}}", items.join(","))
    };
    for (l, set) in factorings.per_layer.iter().enumerate() {
        for f in set.factorings() {
            writeln!(
                out,
                "layer {} I={} J={} saving={}",
                l + 1,
                fmt_set(&f.neurons),
                fmt_set(&f.inputs),
                f.saving()
            )
            .unwrap();
        }
        writeln!(
            out,
            "layer {} total: {} factorings, saving {}",
            l + 1,
            set.len(),
            set.total_saving()
        )
        .unwrap();
    }
    writeln!(out, "total saving {}", factorings.total_saving()).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(neurons: &[usize], inputs: &[usize]) -> Factoring {
        Factoring::new(neurons.iter().copied(), inputs.iter().copied()).unwrap()
    }

    #[test]
    fn savings_of_worked_examples() {
        // ( {1,2}, {0,2} ) saves 2 and ( {2,3}, {1,3,4,5} ) saves 4,
        // totalling 6.
        let f1 = f(&[1, 2], &[0, 2]);
        let f2 = f(&[2, 3], &[1, 3, 4, 5]);
        assert_eq!(f1.saving(), 2);
        assert_eq!(f2.saving(), 4);
        assert_eq!(f1.saving() + f2.saving(), 6);
        // ( {1,2}, {0,2,3} ) saves (2-1)*3 = 3.
        assert_eq!(f(&[1, 2], &[0, 2, 3]).saving(), 3);
    }

    #[test]
    fn empty_input_set_saves_nothing() {
        assert_eq!(f(&[0, 1], &[]).saving(), 0);
    }

    #[test]
    fn single_neuron_rejected() {
        assert_eq!(
            Factoring::new([3], [0, 1]),
            Err(FactoringError::TooFewNeurons)
        );
    }

    #[test]
    fn overlap_detection() {
        let f1 = f(&[1, 2], &[0, 2]);
        let f2 = f(&[2, 3], &[1, 3, 4, 5]);
        assert!(non_overlapping(&f1, &f2));
        assert!(!non_overlapping(&f1, &f1));
        // Shared cell (2, 0).
        assert!(!non_overlapping(&f(&[1, 2], &[0]), &f(&[2, 3], &[0])));
        // Same inputs, disjoint neurons is fine.
        assert!(non_overlapping(&f(&[1, 2], &[0]), &f(&[3, 4], &[0])));
    }

    #[test]
    fn set_rejects_overlap_and_tracks_cells() {
        let mut set = FactoringSet::new();
        set.insert(f(&[1, 2], &[0, 2])).unwrap();
        set.insert(f(&[2, 3], &[1, 3, 4, 5])).unwrap();
        assert_eq!(set.total_saving(), 6);
        assert_eq!(
            set.used().len(),
            2 * 2 + 2 * 4,
            "used must be the union of I x J cells"
        );
        assert_eq!(
            set.clone().insert(f(&[2, 9], &[0])),
            Err(FactoringError::Overlap(2, 0))
        );
    }

    #[test]
    fn agreement_checked_against_matrix() {
        let m = WeightMatrix::from_bits(vec![
            vec![true, false, true],
            vec![true, true, true],
            vec![false, false, false],
        ])
        .unwrap();
        assert!(f(&[0, 1], &[0, 2]).check_against(&m).is_ok());
        assert_eq!(
            f(&[0, 1], &[1]).check_against(&m),
            Err(FactoringError::Disagreement(1))
        );
        assert!(matches!(
            f(&[0, 3], &[0]).check_against(&m),
            Err(FactoringError::OutOfRange { .. })
        ));
    }
}
