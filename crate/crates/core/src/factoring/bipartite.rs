//! Maximum edge biclique and its embedding into a factoring instance.
//!
//! The hardness of the 1-factoring problem comes from bipartite graphs:
//! adding one extra neuron connected to every input turns a graph into a
//! layer matrix whose best factoring through that neuron saves exactly as
//! many weight operations as the largest biclique has edges. Implemented
//! here as a generator plus a brute-force biclique oracle, the pair gives an
//! end-to-end equality check on random graphs.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::WeightMatrix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex ({0}, {1}) out of range")]
    VertexOutOfRange(usize, usize),
    #[error("graph must have at least one vertex on each side")]
    Empty,
    #[error("graph too large for the exhaustive oracle ({0} left vertices, limit 12)")]
    TooLarge(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Bipartite graph over vertex sets `0..left` and `0..right`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    left: usize,
    right: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize) -> BipartiteGraph {
        BipartiteGraph {
            left,
            right,
            edges: BTreeSet::new(),
        }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a < self.left && b < self.right, "vertex out of range");
        self.edges.insert((a, b));
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    /// Complete bipartite graph `K(left, right)`.
    pub fn complete(left: usize, right: usize) -> BipartiteGraph {
        let mut g = BipartiteGraph::new(left, right);
        for a in 0..left {
            for b in 0..right {
                g.add_edge(a, b);
            }
        }
        g
    }
}

/// Exact maximum edge biclique: vertex sets `(A, B)` with every cross edge
/// present, maximizing `|A| * |B|`. Returns `(A, B, edge_count)`; an
/// edgeless graph yields empty sets and 0.
pub fn brute_force_max_edge_biclique(
    graph: &BipartiteGraph,
) -> Result<(BTreeSet<usize>, BTreeSet<usize>, u64), GraphError> {
    if graph.left > 12 || graph.right > 12 {
        return Err(GraphError::TooLarge(graph.left.max(graph.right)));
    }
    // Right-neighborhood of each left vertex, as a bitmask.
    let neighbors: Vec<u32> = (0..graph.left)
        .map(|a| {
            (0..graph.right)
                .filter(|&b| graph.has_edge(a, b))
                .fold(0u32, |m, b| m | 1 << b)
        })
        .collect();

    let mut best = (0u64, 0u32, 0u32);
    for a_mask in 1u32..1 << graph.left {
        let common = (0..graph.left)
            .filter(|&a| a_mask >> a & 1 == 1)
            .fold(u32::MAX >> (32 - graph.right), |m, a| m & neighbors[a]);
        let edges = a_mask.count_ones() as u64 * common.count_ones() as u64;
        if edges > best.0 {
            best = (edges, a_mask, common);
        }
    }
    let (edges, a_mask, b_mask) = best;
    let a = (0..graph.left).filter(|&v| a_mask >> v & 1 == 1).collect();
    let b = (0..graph.right).filter(|&v| b_mask >> v & 1 == 1).collect();
    Ok((a, b, edges))
}

/// Index of the always-connected extra row in [`reduce_meb_to_factoring`]'s
/// output: the last row of the matrix.
pub fn reduced_extra_row(graph: &BipartiteGraph) -> usize {
    graph.left
}

/// Embed a bipartite graph into a layer weight matrix: one neuron row per
/// left vertex plus an extra all-ones row, one input column per right
/// vertex, bit 1 exactly on the edges.
pub fn reduce_meb_to_factoring(graph: &BipartiteGraph) -> Result<WeightMatrix, GraphError> {
    if graph.left == 0 || graph.right == 0 {
        return Err(GraphError::Empty);
    }
    let mut rows: Vec<Vec<bool>> = (0..graph.left)
        .map(|a| (0..graph.right).map(|b| graph.has_edge(a, b)).collect())
        .collect();
    rows.push(vec![true; graph.right]);
    Ok(WeightMatrix::from_bits(rows).expect("nonempty by construction"))
}

/// Parse the graph text format:
///
/// ```text
/// left 3
/// right 3
/// 0 0
/// 1 2
/// ```
///
/// Header lines give the side sizes, the remaining lines list edges as
/// 0-based `left right` pairs. Blank lines and `#` comments are ignored.
pub fn parse_graph(text: &str) -> Result<BipartiteGraph, GraphError> {
    let err = |line: usize, msg: &str| GraphError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (n, line) = lines.next().ok_or_else(|| err(0, "empty graph file"))?;
    let left: usize = line
        .strip_prefix("left ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| err(n, "expected `left <n>`"))?;
    let (n, line) = lines.next().ok_or_else(|| err(0, "missing right side"))?;
    let right: usize = line
        .strip_prefix("right ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| err(n, "expected `right <n>`"))?;
    if left == 0 || right == 0 {
        return Err(GraphError::Empty);
    }
    let mut graph = BipartiteGraph::new(left, right);
    for (n, line) in lines {
        let mut parts = line.split_whitespace();
        let a: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(n, "expected `a b` edge"))?;
        let b: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(n, "expected `a b` edge"))?;
        if parts.next().is_some() {
            return Err(err(n, "expected exactly two vertex indices"));
        }
        if a >= left || b >= right {
            return Err(GraphError::VertexOutOfRange(a, b));
        }
        graph.add_edge(a, b);
    }
    Ok(graph)
}
