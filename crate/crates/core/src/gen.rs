//! Seeded random fixture generation: models, inputs, properties, 3-CNF
//! instances and bipartite graphs. Deterministic given the seed, so test
//! suites and CLI generators stay reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::factoring::bipartite::BipartiteGraph;
use crate::model::{BnnModel, WeightMatrix};
use crate::property::{Property, Relation};
use crate::reductions::Cnf3Instance;

/// Default seed used when none is given on the command line.
pub const DEFAULT_SEED: u64 = 1;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> WeightMatrix {
    let bits = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen::<bool>()).collect())
        .collect();
    WeightMatrix::from_bits(bits).expect("nonempty matrix")
}

/// Random fully connected model with the given `d(0)..d(L)` dimensions.
pub fn random_model(rng: &mut impl Rng, dims: &[usize]) -> BnnModel {
    let layers = dims
        .windows(2)
        .map(|w| random_matrix(rng, w[1], w[0] + 1))
        .collect();
    BnnModel::new(dims.to_vec(), layers).expect("valid dims")
}

pub fn random_bipolar_input(rng: &mut impl Rng, len: usize) -> Vec<i64> {
    (0..len).map(|_| if rng.gen() { 1 } else { -1 }).collect()
}

pub fn random_bit_input(rng: &mut impl Rng, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.gen()).collect()
}

/// Random boolean combination of output-count threshold atoms (and the
/// occasional input atom) for a model with the given output shape.
pub fn random_property(
    rng: &mut impl Rng,
    input_dim: usize,
    output_dim: usize,
    output_fan_in: usize,
    depth: usize,
) -> Property {
    if depth == 0 || rng.gen_ratio(2, 5) {
        if rng.gen_ratio(1, 5) {
            return Property::input_atom(rng.gen_range(0..input_dim), rng.gen());
        }
        let relation = match rng.gen_range(0..5) {
            0 => Relation::Ge,
            1 => Relation::Le,
            2 => Relation::Eq,
            3 => Relation::Gt,
            _ => Relation::Lt,
        };
        return Property::output_atom(
            rng.gen_range(0..output_dim),
            relation,
            rng.gen_range(0..=output_fan_in as u32),
        );
    }
    let a = random_property(rng, input_dim, output_dim, output_fan_in, depth - 1);
    let b = random_property(rng, input_dim, output_dim, output_fan_in, depth - 1);
    match rng.gen_range(0..4) {
        0 => Property::and(a, b),
        1 => Property::or(a, b),
        2 => Property::implies(a, b),
        _ => Property::not(a),
    }
}

/// Random 3-CNF with `var_count` variables and `clause_count` clauses.
pub fn random_cnf3(rng: &mut impl Rng, var_count: usize, clause_count: usize) -> Cnf3Instance {
    let clauses = (0..clause_count)
        .map(|_| {
            [0; 3].map(|_| {
                let var = rng.gen_range(1..=var_count) as i32;
                if rng.gen() {
                    var
                } else {
                    -var
                }
            })
        })
        .collect();
    Cnf3Instance::new(var_count, clauses).expect("literals in range")
}

/// Random bipartite graph where each edge is present with probability
/// `num/denom`; resampled until at least one edge exists.
pub fn random_bipartite(
    rng: &mut impl Rng,
    left: usize,
    right: usize,
    num: u32,
    denom: u32,
) -> BipartiteGraph {
    loop {
        let mut g = BipartiteGraph::new(left, right);
        for a in 0..left {
            for b in 0..right {
                if rng.gen_ratio(num, denom) {
                    g.add_edge(a, b);
                }
            }
        }
        if g.edge_count() > 0 {
            return g;
        }
    }
}
