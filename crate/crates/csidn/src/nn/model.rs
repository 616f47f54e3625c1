//! Dense feed-forward network with a softmax head.
//!
//! Layers store weights as `in_dim x out_dim` matrices so a batch forward pass
//! is `activations.dot(&weights) + bias`. Hidden layers are ReLU, the final
//! layer is identity and feeds the softmax in [`MLPModel::forward`].

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::loss::softmax_rows;

/// Checkpoint format version accepted by [`MLPModel::load`].
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative evaluated at pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer: `out = activation(x . weights + bias)`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// `in_dim x out_dim`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.ncols()
    }
}

/// Dense MLP classifier; `forward` yields per-row probability vectors.
#[derive(Debug, Clone)]
pub struct MLPModel {
    layers: Vec<DenseLayer>,
}

/// Full forward pass bookkeeping for backpropagation.
pub(crate) struct ForwardCache {
    /// Pre-activations per layer.
    pub pre: Vec<Array2<f64>>,
    /// Post-activations per layer; `post[0]` is the input batch.
    pub post: Vec<Array2<f64>>,
}

impl MLPModel {
    /// Build a model with the given layer widths, e.g. `[2, 32, 32, 3]`.
    ///
    /// Hidden layers use ReLU, the last layer is identity (softmax is applied
    /// by `forward`). Weights and biases are drawn uniformly from
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` using a ChaCha stream seeded by
    /// `seed`, so construction is reproducible.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config(
                "model needs at least an input and an output dimension".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for i in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            let limit = 1.0 / (fan_in as f64).sqrt();
            let weights =
                Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-limit..limit));
            let bias = Array1::from_shape_fn(fan_out, |_| rng.gen_range(-limit..limit));
            let activation = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(DenseLayer {
                weights,
                bias,
                activation,
            });
        }
        Ok(Self { layers })
    }

    /// Assemble a model from explicit layers, checking that dimensions chain.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        for i in 1..layers.len() {
            if layers[i - 1].out_dim() != layers[i].in_dim() {
                return Err(Error::Shape {
                    location: format!("layer {i}"),
                    expected: layers[i - 1].out_dim(),
                    actual: layers[i].in_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    /// Number of classes (width of the softmax head).
    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    /// Raw pre-softmax outputs for a batch (`n x input_dim` -> `n x k`).
    pub fn logits(&self, batch: &Array2<f64>) -> Result<Array2<f64>> {
        let mut cache = self.forward_cache(batch)?;
        Ok(cache.post.pop().expect("non-empty"))
    }

    /// Per-row probability vectors: softmax over the final layer.
    pub fn forward(&self, batch: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(softmax_rows(&self.logits(batch)?))
    }

    pub(crate) fn forward_cache(&self, batch: &Array2<f64>) -> Result<ForwardCache> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::Shape {
                location: "layer 0 input".into(),
                expected: self.input_dim(),
                actual: batch.ncols(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(batch.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = post.last().expect("non-empty");
            if input.ncols() != layer.in_dim() {
                return Err(Error::Shape {
                    location: format!("layer {i} input"),
                    expected: layer.in_dim(),
                    actual: input.ncols(),
                });
            }
            let mut z = input.dot(&layer.weights);
            z += &layer.bias;
            let a = z.mapv(|v| layer.activation.apply(v));
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardCache { pre, post })
    }

    /// Predicted class per row (argmax of `forward`, lowest index on ties).
    pub fn predict(&self, batch: &Array2<f64>) -> Result<Vec<usize>> {
        let probs = self.forward(batch)?;
        Ok(probs
            .axis_iter(Axis(0))
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect())
    }

    /// Serialize to a versioned JSON checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            dims: self.dims(),
            activations: self.layers.iter().map(|l| l.activation).collect(),
            weights: self
                .layers
                .iter()
                .map(|l| l.weights.iter().copied().collect())
                .collect(),
            biases: self.layers.iter().map(|l| l.bias.to_vec()).collect(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &ckpt)?;
        Ok(())
    }

    /// Load a checkpoint written by [`MLPModel::save`]. Rejects unknown versions.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ckpt: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "checkpoint version {} not supported (expected {})",
                ckpt.version, CHECKPOINT_VERSION
            )));
        }
        if ckpt.dims.len() < 2
            || ckpt.weights.len() != ckpt.dims.len() - 1
            || ckpt.biases.len() != ckpt.weights.len()
            || ckpt.activations.len() != ckpt.weights.len()
        {
            return Err(Error::Schema("checkpoint layer counts disagree".into()));
        }
        let mut layers = Vec::with_capacity(ckpt.weights.len());
        for i in 0..ckpt.weights.len() {
            let (din, dout) = (ckpt.dims[i], ckpt.dims[i + 1]);
            let weights = Array2::from_shape_vec((din, dout), ckpt.weights[i].clone())
                .map_err(|_| Error::Schema(format!("layer {i} weight size mismatch")))?;
            if ckpt.biases[i].len() != dout {
                return Err(Error::Schema(format!("layer {i} bias size mismatch")));
            }
            layers.push(DenseLayer {
                weights,
                bias: Array1::from_vec(ckpt.biases[i].clone()),
                activation: ckpt.activations[i],
            });
        }
        Self::from_layers(layers)
    }

    /// Layer widths including the input dimension.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.out_dim()));
        dims
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    dims: Vec<usize>,
    activations: Vec<Activation>,
    /// Row-major weight entries per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_model_gives_uniform_rows() {
        let mut model = MLPModel::new(&[2, 4, 3], 0).unwrap();
        for layer in model.layers_mut() {
            layer.weights.fill(0.0);
            layer.bias.fill(0.0);
        }
        let out = model.forward(&array![[0.3, -1.2], [5.0, 2.0]]).unwrap();
        for row in out.axis_iter(Axis(0)) {
            for &v in row {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let model = MLPModel::new(&[3, 8, 8, 4], 7).unwrap();
        let batch = Array2::from_shape_fn((16, 3), |(i, j)| (i as f64 - 8.0) * 0.3 + j as f64);
        let probs = model.forward(&batch).unwrap();
        for row in probs.axis_iter(Axis(0)) {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_names_layer() {
        let model = MLPModel::new(&[2, 4, 3], 0).unwrap();
        let err = model.forward(&Array2::zeros((1, 5))).unwrap_err();
        match err {
            Error::Shape { location, .. } => assert!(location.contains("layer 0")),
            other => panic!("expected shape error, got {other}"),
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let model = MLPModel::new(&[2, 16, 3], 9).unwrap();
        let batch = array![[0.5, -0.25], [1.5, 2.0]];
        let a = model.forward(&batch).unwrap();
        let b = model.forward(&batch).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_round_trip_and_version_gate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = MLPModel::new(&[2, 8, 3], 11).unwrap();
        model.save(&path).unwrap();
        let loaded = MLPModel::load(&path).unwrap();
        let batch = array![[0.1, 0.2]];
        assert_eq!(
            model.forward(&batch).unwrap(),
            loaded.forward(&batch).unwrap()
        );

        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("\"version\":1", "\"version\":99", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            MLPModel::load(&path).unwrap_err(),
            Error::Schema(_)
        ));
    }
}
