//! Greedy per-neuron factoring search.
//!
//! For every neuron `i` (ascending), every still-unused weight cell `(i, j)`
//! seeds a candidate factoring; the candidate with the strictly greatest
//! saving is kept, its cells are marked used and the scan moves on. The seed
//! expansion builds, per column `j'`, the set `I_{j'}` of neurons whose
//! `j'`-th weight matches neuron `i`'s, intersects each with `I_j`, and pairs
//! every `I_{j'}` with the columns whose sets contain it. Ties resolve to the
//! lowest index so results are deterministic.

use std::collections::BTreeSet;

use crate::model::WeightMatrix;

use super::{Factoring, FactoringSet};

/// Dense row set over neuron indices.
#[derive(Clone, PartialEq, Eq)]
struct RowSet {
    words: Vec<u64>,
}

impl RowSet {
    fn empty(rows: usize) -> RowSet {
        RowSet {
            words: vec![0; rows.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn intersect(&self, other: &RowSet) -> RowSet {
        RowSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn is_subset_of(&self, other: &RowSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                out.push(w * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }
}

/// Used weight cells as a dense grid.
#[derive(Clone)]
pub(crate) struct CellGrid {
    cols: usize,
    bits: Vec<bool>,
}

impl CellGrid {
    pub(crate) fn empty(rows: usize, cols: usize) -> CellGrid {
        CellGrid {
            cols,
            bits: vec![false; rows * cols],
        }
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.bits[i * self.cols + j] = true;
    }
}

/// `I_{j'}` for every column `j'`: neurons matching neuron `i`'s weight on
/// `j'`, excluding used cells. Depends only on `i` and the frozen `used`
/// grid, so one build serves all seeds of neuron `i`.
fn match_sets(weights: &WeightMatrix, i: usize, used: &CellGrid) -> Vec<RowSet> {
    (0..weights.cols())
        .map(|jp| {
            let want = weights.bit(i, jp);
            let mut set = RowSet::empty(weights.rows());
            for ip in 0..weights.rows() {
                if weights.bit(ip, jp) == want && !used.contains(ip, jp) {
                    set.insert(ip);
                }
            }
            set
        })
        .collect()
}

/// Expand the seed cell `(i, j)`: intersect every match set with `I_j`, pair
/// each result with the columns whose sets contain it, and return the pair
/// with the greatest saving (first maximum wins).
fn best_for_seed(match_sets: &[RowSet], j: usize) -> Option<Factoring> {
    let seed = &match_sets[j];
    let sets: Vec<RowSet> = match_sets.iter().map(|s| s.intersect(seed)).collect();
    let cols = sets.len();
    let mut best: Option<(u64, usize)> = None;
    for jp in 0..cols {
        let size = sets[jp].len() as u64;
        if size <= 1 {
            continue;
        }
        // (size-1)*cols bounds the saving; skip dominated candidates early.
        if let Some((best_saving, _)) = best {
            if (size - 1) * cols as u64 <= best_saving {
                continue;
            }
        }
        let benefiting = sets.iter().filter(|s| sets[jp].is_subset_of(s)).count() as u64;
        let saving = (size - 1) * benefiting;
        if best.map_or(true, |(s, _)| saving > s) {
            best = Some((saving, jp));
        }
    }
    let (saving, jp) = best?;
    if saving == 0 {
        return None;
    }
    let inputs: Vec<usize> = (0..cols).filter(|&jq| sets[jp].is_subset_of(&sets[jq])).collect();
    Some(Factoring {
        neurons: sets[jp].indices().into_iter().collect(),
        inputs: inputs.into_iter().collect(),
    })
}

/// Candidate factoring for the unused seed cell `(i, j)`, or `None` when no
/// second neuron can join (the best saving is 0).
pub fn get_factoring(
    weights: &WeightMatrix,
    i: usize,
    j: usize,
    used: &BTreeSet<(usize, usize)>,
) -> Option<Factoring> {
    debug_assert!(!used.contains(&(i, j)));
    let mut grid = CellGrid::empty(weights.rows(), weights.cols());
    for &(ui, uj) in used {
        grid.insert(ui, uj);
    }
    best_for_seed(&match_sets(weights, i, &grid), j)
}

/// Greedy factoring selection over a whole layer matrix.
pub fn find_factorings(weights: &WeightMatrix) -> FactoringSet {
    let mut used = CellGrid::empty(weights.rows(), weights.cols());
    let mut result = FactoringSet::new();
    for i in 0..weights.rows() {
        // `used` is frozen while neuron i is scanned.
        let sets = match_sets(weights, i, &used);
        let mut best: Option<Factoring> = None;
        for j in 0..weights.cols() {
            if used.contains(i, j) {
                continue;
            }
            if let Some(candidate) = best_for_seed(&sets, j) {
                if best
                    .as_ref()
                    .map_or(true, |b| candidate.saving() > b.saving())
                {
                    best = Some(candidate);
                }
            }
        }
        if let Some(factoring) = best {
            for (ci, cj) in factoring.cells() {
                used.insert(ci, cj);
            }
            result
                .insert(factoring)
                .expect("greedy candidates never overlap used cells");
        }
    }
    result
}
