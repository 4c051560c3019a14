//! Factoring strategies behind a common trait, registered by name and
//! selected at runtime (`--factoring off|heuristic|partitioned`).

use std::collections::BTreeMap;

use crate::model::{BnnModel, WeightMatrix};

use super::{greedy, partition, FactoringSet, ModelFactorings};

/// One way of producing a non-overlapping factoring set for a layer.
pub trait FactoringStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn factor_layer(&self, weights: &WeightMatrix) -> FactoringSet;

    /// Apply the strategy to every layer of a model.
    fn factor_model(&self, model: &BnnModel) -> ModelFactorings {
        ModelFactorings {
            per_layer: model
                .layers()
                .iter()
                .map(|layer| self.factor_layer(layer))
                .collect(),
        }
    }
}

/// No sharing: every neuron counts privately.
pub struct NoFactoring;

impl FactoringStrategy for NoFactoring {
    fn name(&self) -> &'static str {
        "off"
    }

    fn factor_layer(&self, _weights: &WeightMatrix) -> FactoringSet {
        FactoringSet::new()
    }
}

/// The greedy per-neuron search over the whole matrix.
pub struct GreedyFactoring;

impl FactoringStrategy for GreedyFactoring {
    fn name(&self) -> &'static str {
        "heuristic"
    }

    fn factor_layer(&self, weights: &WeightMatrix) -> FactoringSet {
        greedy::find_factorings(weights)
    }
}

/// The greedy search applied per block; the right choice for wide layers.
pub struct PartitionedFactoring {
    pub block_rows: usize,
    pub block_cols: usize,
}

impl Default for PartitionedFactoring {
    fn default() -> Self {
        PartitionedFactoring {
            block_rows: partition::DEFAULT_BLOCK,
            block_cols: partition::DEFAULT_BLOCK,
        }
    }
}

impl FactoringStrategy for PartitionedFactoring {
    fn name(&self) -> &'static str {
        "partitioned"
    }

    fn factor_layer(&self, weights: &WeightMatrix) -> FactoringSet {
        partition::find_factorings_partitioned(weights, self.block_rows, self.block_cols)
    }
}

/// Parsed strategy selection, convertible into a boxed strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactoringMode {
    Off,
    Heuristic,
    Partitioned {
        block_rows: usize,
        block_cols: usize,
    },
}

impl FactoringMode {
    pub fn strategy(self) -> Box<dyn FactoringStrategy> {
        match self {
            FactoringMode::Off => Box::new(NoFactoring),
            FactoringMode::Heuristic => Box::new(GreedyFactoring),
            FactoringMode::Partitioned {
                block_rows,
                block_cols,
            } => Box::new(PartitionedFactoring {
                block_rows,
                block_cols,
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FactoringMode::Off => "off",
            FactoringMode::Heuristic => "heuristic",
            FactoringMode::Partitioned { .. } => "partitioned",
        }
    }
}

/// Name-indexed strategy registry.
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn FactoringStrategy>>,
}

impl StrategyRegistry {
    /// Registry holding the three built-in strategies, with the given block
    /// shape for the partitioned one.
    pub fn builtin(block_rows: usize, block_cols: usize) -> StrategyRegistry {
        let mut registry = StrategyRegistry {
            strategies: BTreeMap::new(),
        };
        registry.register(Box::new(NoFactoring));
        registry.register(Box::new(GreedyFactoring));
        registry.register(Box::new(PartitionedFactoring {
            block_rows,
            block_cols,
        }));
        registry
    }

    pub fn register(&mut self, strategy: Box<dyn FactoringStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<&dyn FactoringStrategy> {
        self.strategies.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}
