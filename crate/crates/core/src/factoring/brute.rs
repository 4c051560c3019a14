//! Exponential-time factoring oracles for small instances. These provide
//! the ground truth the greedy heuristic and the biclique reduction are
//! tested against; they deliberately share no code with the heuristic.

use super::{Factoring, FactoringError, FactoringSet};
use crate::model::WeightMatrix;

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask >> b & 1 == 1).collect()
}

/// Columns on which every row selected by `rows_mask` agrees, as a column
/// bitmask. `col_patterns[j]` holds column j as a row bitmask.
fn agreement_mask(col_patterns: &[u32], rows_mask: u32) -> u32 {
    let mut agree = 0;
    for (j, &pattern) in col_patterns.iter().enumerate() {
        let bits = pattern & rows_mask;
        if bits == 0 || bits == rows_mask {
            agree |= 1 << j;
        }
    }
    agree
}

fn column_patterns(weights: &WeightMatrix) -> Vec<u32> {
    (0..weights.cols())
        .map(|j| {
            (0..weights.rows())
                .filter(|&i| weights.bit(i, j))
                .fold(0u32, |m, i| m | 1 << i)
        })
        .collect()
}

/// Exact optimum of the k-factoring problem for `k <= 2` on matrices up to
/// 8x8: the maximum total saving over at most `k` pairwise non-overlapping
/// factorings, together with a witness set.
pub fn brute_force_optimal_factorings(
    weights: &WeightMatrix,
    k: usize,
) -> Result<(FactoringSet, u64), FactoringError> {
    if weights.rows() > 8 || weights.cols() > 8 {
        return Err(FactoringError::InstanceTooLarge(format!(
            "{}x{} matrix (limit 8x8)",
            weights.rows(),
            weights.cols()
        )));
    }
    if !(1..=2).contains(&k) {
        return Err(FactoringError::InstanceTooLarge(format!("k = {k} (limit 2)")));
    }

    let cols = column_patterns(weights);
    // All row sets of size >= 2 with a nonempty agreement; anything else has
    // saving 0 and never helps.
    let candidates: Vec<(u32, u32)> = (0u32..1 << weights.rows())
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (m, agreement_mask(&cols, m)))
        .filter(|&(_, agree)| agree != 0)
        .collect();

    let mut best_total = 0u64;
    let mut best: Vec<(u32, u32)> = Vec::new();

    for (idx, &(rows_a, agree_a)) in candidates.iter().enumerate() {
        let coef_a = rows_a.count_ones() as u64 - 1;
        let single = coef_a * agree_a.count_ones() as u64;
        if single > best_total {
            best_total = single;
            best = vec![(rows_a, agree_a)];
        }
        if k < 2 {
            continue;
        }
        for &(rows_b, agree_b) in &candidates[idx..] {
            let coef_b = rows_b.count_ones() as u64 - 1;
            let (ja, jb) = if rows_a & rows_b == 0 {
                // Disjoint neuron sets never collide on cells.
                (agree_a, agree_b)
            } else {
                // Shared neurons force disjoint column sets; each contested
                // column goes to the factoring with the larger coefficient.
                let contested = agree_a & agree_b;
                if coef_a >= coef_b {
                    (agree_a, agree_b & !contested)
                } else {
                    (agree_a & !contested, agree_b)
                }
            };
            let total = coef_a * ja.count_ones() as u64 + coef_b * jb.count_ones() as u64;
            if total > best_total {
                best_total = total;
                best = vec![(rows_a, ja), (rows_b, jb)];
            }
        }
    }

    let mut set = FactoringSet::new();
    for (rows_mask, cols_mask) in best {
        if cols_mask == 0 {
            continue;
        }
        set.insert(Factoring {
            neurons: mask_indices(rows_mask).into_iter().collect(),
            inputs: mask_indices(cols_mask).into_iter().collect(),
        })
        .expect("oracle construction is non-overlapping");
    }
    Ok((set, best_total))
}

/// Exact best single factoring whose neuron set contains `row`, with the
/// full agreement column set. This is the quantity the biclique reduction
/// preserves: the designated row is connected everywhere, so any factoring
/// through it shares actual links.
pub fn brute_force_optimal_factoring_containing(
    weights: &WeightMatrix,
    row: usize,
) -> Result<Option<(Factoring, u64)>, FactoringError> {
    if weights.rows() > 16 {
        return Err(FactoringError::InstanceTooLarge(format!(
            "{} rows (limit 16)",
            weights.rows()
        )));
    }
    let cols = column_patterns(weights);
    let mut best: Option<(u64, u32, u32)> = None;
    for rows_mask in 0u32..1 << weights.rows() {
        if rows_mask >> row & 1 == 0 || rows_mask.count_ones() < 2 {
            continue;
        }
        let agree = agreement_mask(&cols, rows_mask);
        let saving = (rows_mask.count_ones() as u64 - 1) * agree.count_ones() as u64;
        if saving > 0 && best.map_or(true, |(s, _, _)| saving > s) {
            best = Some((saving, rows_mask, agree));
        }
    }
    Ok(best.map(|(saving, rows_mask, cols_mask)| {
        (
            Factoring {
                neurons: mask_indices(rows_mask).into_iter().collect(),
                inputs: mask_indices(cols_mask).into_iter().collect(),
            },
            saving,
        )
    }))
}
