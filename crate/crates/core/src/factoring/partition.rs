//! Block-partitioned factoring for wide layers.
//!
//! The seed expansion does quadratic set work per column, which gets
//! expensive for matrices with hundreds of columns. Partitioning the matrix
//! into rectangular blocks bounds that work and lets blocks run in parallel;
//! the merged result stays non-overlapping because blocks own disjoint
//! cells. The price is that factorings can no longer span block boundaries.

use rayon::prelude::*;

use crate::model::WeightMatrix;

use super::{greedy, Factoring, FactoringSet};

/// Default block edge; bounds the per-block quadratic work.
pub const DEFAULT_BLOCK: usize = 64;

/// Run the greedy search independently on `block_rows x block_cols` blocks
/// and merge. Deterministic regardless of worker scheduling: blocks are
/// merged in row-major block order.
pub fn find_factorings_partitioned(
    weights: &WeightMatrix,
    block_rows: usize,
    block_cols: usize,
) -> FactoringSet {
    assert!(block_rows > 0 && block_cols > 0, "block sizes must be positive");
    let row_starts: Vec<usize> = (0..weights.rows()).step_by(block_rows).collect();
    let col_starts: Vec<usize> = (0..weights.cols()).step_by(block_cols).collect();

    let blocks: Vec<(usize, usize)> = row_starts
        .iter()
        .flat_map(|&r| col_starts.iter().map(move |&c| (r, c)))
        .collect();

    let per_block: Vec<FactoringSet> = blocks
        .par_iter()
        .map(|&(r0, c0)| {
            let r1 = (r0 + block_rows).min(weights.rows());
            let c1 = (c0 + block_cols).min(weights.cols());
            greedy::find_factorings(&weights.block(r0, r1, c0, c1))
        })
        .collect();

    let mut merged = FactoringSet::new();
    for ((r0, c0), set) in blocks.into_iter().zip(per_block) {
        for f in set.factorings() {
            let shifted = Factoring {
                neurons: f.neurons.iter().map(|&i| i + r0).collect(),
                inputs: f.inputs.iter().map(|&j| j + c0).collect(),
            };
            merged
                .insert(shifted)
                .expect("blocks own disjoint cells, merge cannot overlap");
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn single_block_equals_unpartitioned() {
        let mut rng = gen::rng(31);
        for _ in 0..20 {
            let m = gen::random_matrix(&mut rng, 7, 9);
            assert_eq!(
                find_factorings_partitioned(&m, 7, 9),
                greedy::find_factorings(&m)
            );
            assert_eq!(
                find_factorings_partitioned(&m, 100, 100),
                greedy::find_factorings(&m)
            );
        }
    }

    #[test]
    fn merged_blocks_satisfy_invariants() {
        let mut rng = gen::rng(32);
        let m = gen::random_matrix(&mut rng, 100, 100);
        let set = find_factorings_partitioned(&m, 50, 50);
        set.check_against(&m).unwrap();
        assert!(!set.is_empty());
    }

    #[test]
    fn partitioning_is_deterministic() {
        let mut rng = gen::rng(33);
        let m = gen::random_matrix(&mut rng, 64, 64);
        let a = find_factorings_partitioned(&m, 17, 23);
        let b = find_factorings_partitioned(&m, 17, 23);
        assert_eq!(a, b);
    }

    #[test]
    fn splitting_identical_rows_costs_saving() {
        // Two identical rows split across two row blocks cannot be factored
        // at all, while the unpartitioned run shares the full row.
        let m = WeightMatrix::from_bits(vec![vec![true, false, true, true]; 2]).unwrap();
        let whole = greedy::find_factorings(&m);
        let split = find_factorings_partitioned(&m, 1, 4);
        assert_eq!(whole.total_saving(), 4);
        assert!(split.total_saving() < whole.total_saving());
    }
}
