//! Binarized network representation and reference evaluators.
//!
//! A network is a sequence of fully connected layers over bipolar weights
//! (`-1`/`+1`). Index 0 of every weight row is the bias weight; the matching
//! bias input is the constant `+1` (bit `1`). Hidden neurons apply a
//! sign-with-ties-to-`+1` activation to the weighted sum; the output layer
//! omits the activation and exposes raw values.
//!
//! Both evaluation domains are provided: the bipolar weighted sum, and the
//! Boolean XNOR/popcount form used by the circuit encoding. They are linked
//! by `bipolar = 2 * count - fan_in` (fan-in counts the bias input).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

/// Errors from model construction, parsing and evaluation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("value {0} is not bipolar (expected -1 or +1)")]
    NonBipolar(i64),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("layer {layer}: expected {expected} rows of {width} weights, got {got} rows")]
    ShapeMismatch {
        layer: usize,
        expected: usize,
        width: usize,
        got: usize,
    },
    #[error("model must have at least one layer and no empty layers")]
    EmptyModel,
    #[error("count {count} out of range for fan-in {fan_in}")]
    CountOutOfRange { count: u32, fan_in: u32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Bit image of a bipolar value: `+1` is true, `-1` is false.
pub fn bipolar_to_bit(value: i64) -> Result<bool, ModelError> {
    match value {
        1 => Ok(true),
        -1 => Ok(false),
        other => Err(ModelError::NonBipolar(other)),
    }
}

/// Inverse of [`bipolar_to_bit`].
pub fn bit_to_bipolar(bit: bool) -> i32 {
    if bit {
        1
    } else {
        -1
    }
}

/// A rectangular bit matrix; for model layers, row `i` holds the weights of
/// neuron `i` with the bias weight in column 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    rows: Vec<Vec<bool>>,
}

impl WeightMatrix {
    pub fn from_bits(rows: Vec<Vec<bool>>) -> Result<Self, ModelError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(ModelError::EmptyModel);
        }
        let width = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(ModelError::DimensionMismatch {
                expected: width,
                got: bad.len(),
            });
        }
        Ok(WeightMatrix { rows })
    }

    pub fn from_bipolar(rows: &[Vec<i64>]) -> Result<Self, ModelError> {
        let bits = rows
            .iter()
            .map(|r| r.iter().map(|&v| bipolar_to_bit(v)).collect())
            .collect::<Result<Vec<Vec<bool>>, _>>()?;
        Self::from_bits(bits)
    }

    /// Number of rows (neurons, for a model layer).
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of columns (inputs including bias, for a model layer).
    pub fn cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn bit(&self, row: usize, col: usize) -> bool {
        self.rows[row][col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.rows[row]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[bool]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    /// Columns on which all `rows` agree (empty `rows` yields every column).
    pub fn agreement_columns(&self, rows: &BTreeSet<usize>) -> BTreeSet<usize> {
        (0..self.cols())
            .filter(|&j| {
                let mut vals = rows.iter().map(|&i| self.bit(i, j));
                match vals.next() {
                    Some(first) => vals.all(|v| v == first),
                    None => true,
                }
            })
            .collect()
    }

    /// Copy of the rectangular sub-block `[row0, row1) x [col0, col1)`.
    pub fn block(&self, row0: usize, row1: usize, col0: usize, col1: usize) -> WeightMatrix {
        WeightMatrix {
            rows: self.rows[row0..row1]
                .iter()
                .map(|r| r[col0..col1].to_vec())
                .collect(),
        }
    }
}

/// A layered binarized network with bipolar weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BnnModel {
    /// Per-layer dimensions `d(0)..d(L)`, excluding bias nodes.
    dims: Vec<usize>,
    /// One weight matrix per layer `1..=L`; layer `l` has `d(l)` rows of
    /// `d(l-1) + 1` bits (bias first).
    layers: Vec<WeightMatrix>,
}

impl BnnModel {
    pub fn new(dims: Vec<usize>, layers: Vec<WeightMatrix>) -> Result<Self, ModelError> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) || layers.len() != dims.len() - 1 {
            return Err(ModelError::EmptyModel);
        }
        for (l, m) in layers.iter().enumerate() {
            if m.rows() != dims[l + 1] || m.cols() != dims[l] + 1 {
                return Err(ModelError::ShapeMismatch {
                    layer: l + 1,
                    expected: dims[l + 1],
                    width: dims[l] + 1,
                    got: m.rows(),
                });
            }
        }
        Ok(BnnModel { dims, layers })
    }

    /// Number of layers `L` (input layer excluded).
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Weight matrix of layer `l` (0-based, so layer index `l+1` in network
    /// terms).
    pub fn layer(&self, l: usize) -> &WeightMatrix {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[WeightMatrix] {
        &self.layers
    }

    /// Fan-in (bias included) of neurons in 0-based layer `l`.
    pub fn fan_in(&self, l: usize) -> usize {
        self.dims[l] + 1
    }

    /// Fan-in of the output layer; bounds the output counts.
    pub fn output_fan_in(&self) -> usize {
        self.fan_in(self.layer_count() - 1)
    }

    /// Evaluate in the bipolar domain: weighted sums and sign activations.
    pub fn eval_bipolar(&self, input: &[i64]) -> Result<BipolarEval, ModelError> {
        if input.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        for &v in input {
            bipolar_to_bit(v)?;
        }
        let mut sums = Vec::with_capacity(self.layer_count());
        let mut hidden = Vec::new();
        let mut current: Vec<i64> = input.to_vec();
        for (l, matrix) in self.layers.iter().enumerate() {
            let layer_sums: Vec<i64> = matrix
                .row_iter()
                .map(|row| {
                    // x(0) is the constant +1 bias node.
                    let bias = bit_to_bipolar(row[0]) as i64;
                    bias + row[1..]
                        .iter()
                        .zip(&current)
                        .map(|(&w, &x)| bit_to_bipolar(w) as i64 * x)
                        .sum::<i64>()
                })
                .collect();
            if l + 1 < self.layer_count() {
                current = layer_sums
                    .iter()
                    .map(|&s| if s >= 0 { 1 } else { -1 })
                    .collect();
                hidden.push(current.clone());
            }
            sums.push(layer_sums);
        }
        let outputs = sums.last().unwrap().clone();
        Ok(BipolarEval {
            hidden,
            sums,
            outputs,
        })
    }

    /// Evaluate in the Boolean domain: XNOR, popcount and threshold.
    pub fn eval_boolean(&self, input: &[bool]) -> Result<BooleanEval, ModelError> {
        if input.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut counts = Vec::with_capacity(self.layer_count());
        let mut hidden = Vec::new();
        let mut current: Vec<bool> = input.to_vec();
        for (l, matrix) in self.layers.iter().enumerate() {
            let fan_in = matrix.cols() as u32;
            let layer_counts: Vec<u32> = matrix
                .row_iter()
                .map(|row| {
                    // Bias input bit is fixed to 1, so the bias weight is
                    // XNORed with 1, i.e. passes through.
                    let bias = row[0] as u32;
                    bias + row[1..]
                        .iter()
                        .zip(&current)
                        .map(|(&w, &x)| !(w ^ x) as u32)
                        .sum::<u32>()
                })
                .collect();
            if l + 1 < self.layer_count() {
                current = layer_counts
                    .iter()
                    .map(|&c| c >= fan_in.div_ceil(2))
                    .collect();
                hidden.push(current.clone());
            }
            counts.push(layer_counts);
        }
        let outputs = counts.last().unwrap().clone();
        Ok(BooleanEval {
            hidden,
            counts,
            outputs,
        })
    }
}

/// Per-evaluation record in the bipolar domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipolarEval {
    /// Activation values of each hidden layer.
    pub hidden: Vec<Vec<i64>>,
    /// Weighted sums of every layer, output layer last.
    pub sums: Vec<Vec<i64>>,
    /// Output layer weighted sums (activation omitted).
    pub outputs: Vec<i64>,
}

/// Per-evaluation record in the Boolean domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanEval {
    /// Threshold bits of each hidden layer.
    pub hidden: Vec<Vec<bool>>,
    /// Popcounts of every layer, output layer last.
    pub counts: Vec<Vec<u32>>,
    /// Output layer popcounts in `0..=fan_in`.
    pub outputs: Vec<u32>,
}

/// Map a popcount over `fan_in` connections to the bipolar weighted sum.
pub fn convert_domain(count: u32, fan_in: u32) -> Result<i64, ModelError> {
    if count > fan_in {
        return Err(ModelError::CountOutOfRange { count, fan_in });
    }
    Ok(2 * count as i64 - fan_in as i64)
}

/// Parse the plain-text model format.
///
/// ```text
/// layers 2
/// dims 3 2 2
/// weights 1
/// 1 -1 1 1
/// -1 1 1 -1
/// weights 2
/// 1 1 -1
/// -1 1 1
/// ```
///
/// `dims` lists `d(0)..d(L)`; each `weights l` section holds `d(l)` rows of
/// `d(l-1) + 1` signed values in `{-1, 1}`, bias weight first. Blank lines
/// and `#` comments are ignored.
pub fn parse_model(text: &str) -> Result<BnnModel, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let err = |line: usize, msg: &str| ModelError::Parse {
        line,
        msg: msg.to_string(),
    };

    let (n, line) = lines.next().ok_or_else(|| err(0, "empty model file"))?;
    let layer_count: usize = line
        .strip_prefix("layers ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| err(n, "expected `layers <L>`"))?;

    let (n, line) = lines.next().ok_or_else(|| err(0, "missing dims"))?;
    let dims: Vec<usize> = line
        .strip_prefix("dims ")
        .ok_or_else(|| err(n, "expected `dims <d0> ... <dL>`"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(n, "bad dimension")))
        .collect::<Result<_, _>>()?;
    if dims.len() != layer_count + 1 {
        return Err(err(n, "dims must list exactly L+1 entries"));
    }

    let mut layers = Vec::with_capacity(layer_count);
    for l in 1..=layer_count {
        let (n, line) = lines
            .next()
            .ok_or_else(|| err(0, "missing weights section"))?;
        let got: usize = line
            .strip_prefix("weights ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| err(n, "expected `weights <l>`"))?;
        if got != l {
            return Err(err(n, "weights sections must appear in layer order"));
        }
        let mut rows = Vec::with_capacity(dims[l]);
        for _ in 0..dims[l] {
            let (n, line) = lines.next().ok_or_else(|| err(0, "missing weight row"))?;
            let row: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(n, "bad weight value")))
                .collect::<Result<_, _>>()?;
            if row.len() != dims[l - 1] + 1 {
                return Err(err(n, "weight row has wrong width"));
            }
            for &v in &row {
                if v != 1 && v != -1 {
                    return Err(err(n, "weight outside {-1, 1}"));
                }
            }
            rows.push(row);
        }
        layers.push(WeightMatrix::from_bipolar(&rows)?);
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "trailing content after last layer"));
    }
    BnnModel::new(dims, layers)
}

/// Inverse of [`parse_model`]; `parse(serialize(m)) == m`.
pub fn serialize_model(model: &BnnModel) -> String {
    let mut out = String::new();
    writeln!(out, "layers {}", model.layer_count()).unwrap();
    let dims: Vec<String> = model.dims().iter().map(|d| d.to_string()).collect();
    writeln!(out, "dims {}", dims.join(" ")).unwrap();
    for (l, matrix) in model.layers.iter().enumerate() {
        writeln!(out, "weights {}", l + 1).unwrap();
        for row in matrix.row_iter() {
            let vals: Vec<String> = row
                .iter()
                .map(|&b| bit_to_bipolar(b).to_string())
                .collect();
            writeln!(out, "{}", vals.join(" ")).unwrap();
        }
    }
    out
}
