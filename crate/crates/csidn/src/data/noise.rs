//! Label corruption: class-conditional, directional instance-dependent, and
//! confidence-scored instance-dependent noise.
//!
//! The directional flip law is `p(x) = rho * (cos(w, x) + 1) / 2`, so the flip
//! probability peaks at `rho` in the direction of `w` and vanishes opposite
//! it; its mean over angularly uniform data is `rho / 2`. A corrupted label is
//! replaced uniformly by one of the other `k - 1` classes.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::circles::CirclesSpec;
use crate::data::dataset::Dataset;
use crate::error::{Error, Result};

/// How CSIDN confidence scores are produced by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfidenceMode {
    /// Exact `P(Y = y_noisy | Y_noisy = y_noisy, x)` from the generator's
    /// posterior and transition law.
    #[default]
    ExactPosterior,
    /// Cheaper approximation `1 - p(x)` (the per-sample keep probability).
    KeepProbability,
}

/// Replacement law for corrupted labels. Only uniform-over-other-classes is
/// defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlipLaw {
    #[default]
    UniformOther,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    /// No corruption; confidence is 1 everywhere.
    Clean,
    /// Fixed row-stochastic transition matrix.
    Ccn { matrix: Vec<Vec<f64>> },
    /// Directional instance-dependent noise without confidence scores.
    IdnDirectional { w: Vec<f64>, rho: f64 },
    /// Directional instance-dependent noise with confidence scores.
    CsidnDirectional {
        w: Vec<f64>,
        rho: f64,
        #[serde(default)]
        confidence_mode: ConfidenceMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub flip_law: FlipLaw,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn clean(seed: u64) -> Self {
        Self {
            kind: NoiseKind::Clean,
            flip_law: FlipLaw::UniformOther,
            seed,
        }
    }

    pub fn csidn(w: Vec<f64>, rho: f64, mode: ConfidenceMode, seed: u64) -> Self {
        Self {
            kind: NoiseKind::CsidnDirectional {
                w,
                rho,
                confidence_mode: mode,
            },
            flip_law: FlipLaw::UniformOther,
            seed,
        }
    }

    /// Validate ranges and normalize the direction vector to unit length.
    pub fn validate(&mut self, num_classes: usize) -> Result<()> {
        match &mut self.kind {
            NoiseKind::Clean => Ok(()),
            NoiseKind::Ccn { matrix } => {
                if matrix.len() != num_classes || matrix.iter().any(|r| r.len() != num_classes) {
                    return Err(Error::Config(format!(
                        "ccn matrix must be {num_classes} x {num_classes}"
                    )));
                }
                for (i, row) in matrix.iter().enumerate() {
                    if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                        return Err(Error::Config(format!(
                            "ccn matrix row {i} has entries outside [0, 1]"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::Config(format!(
                            "ccn matrix row {i} sums to {sum}, not 1"
                        )));
                    }
                }
                Ok(())
            }
            NoiseKind::IdnDirectional { w, rho }
            | NoiseKind::CsidnDirectional { w, rho, .. } => {
                if !(0.0..=1.0).contains(rho) {
                    return Err(Error::Config(format!("rho {rho} must lie in [0, 1]")));
                }
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(Error::Config("direction w must be a nonzero vector".into()));
                }
                for v in w.iter_mut() {
                    *v /= norm;
                }
                Ok(())
            }
        }
    }

    /// Per-instance flip probability, when the kind is directional.
    pub fn flip_prob(&self, x: &[f64]) -> Option<f64> {
        match &self.kind {
            NoiseKind::IdnDirectional { w, rho }
            | NoiseKind::CsidnDirectional { w, rho, .. } => Some(idn_flip_prob(x, w, *rho)),
            NoiseKind::Clean => Some(0.0),
            NoiseKind::Ccn { .. } => None,
        }
    }

    /// Ground-truth transition matrix at `x` (row `i` = distribution of the
    /// observed label given true class `i`).
    pub fn true_transition(&self, x: &[f64], num_classes: usize) -> Array2<f64> {
        let k = num_classes;
        match &self.kind {
            NoiseKind::Clean => Array2::eye(k),
            NoiseKind::Ccn { matrix } => {
                Array2::from_shape_fn((k, k), |(i, j)| matrix[i][j])
            }
            NoiseKind::IdnDirectional { w, rho }
            | NoiseKind::CsidnDirectional { w, rho, .. } => {
                let p = idn_flip_prob(x, w, *rho);
                let off = p / (k as f64 - 1.0);
                Array2::from_shape_fn((k, k), |(i, j)| if i == j { 1.0 - p } else { off })
            }
        }
    }
}

/// Directional flip probability `rho * (cos(w, x) + 1) / 2`.
///
/// The cosine at the origin is defined as 0, giving `rho / 2` there.
pub fn idn_flip_prob(x: &[f64], w: &[f64], rho: f64) -> f64 {
    let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cos = if xn == 0.0 || wn == 0.0 {
        0.0
    } else {
        let dot: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
        (dot / (xn * wn)).clamp(-1.0, 1.0)
    };
    rho * (cos + 1.0) / 2.0
}

/// Exact confidence score `P(Y = y_noisy | Y_noisy = y_noisy, X = x)` under
/// the generator's law, or the keep probability in the cheaper mode.
///
/// Returns 0 with a logged warning when the observed-label probability mass is
/// numerically zero.
pub fn compute_confidence(
    x: &[f64],
    y_noisy: usize,
    spec: &NoiseSpec,
    generator: &CirclesSpec,
) -> f64 {
    let mode = match &spec.kind {
        NoiseKind::CsidnDirectional {
            confidence_mode, ..
        } => *confidence_mode,
        NoiseKind::Clean => return 1.0,
        _ => ConfidenceMode::KeepProbability,
    };
    match mode {
        ConfidenceMode::KeepProbability => {
            1.0 - spec.flip_prob(x).expect("directional or clean kind")
        }
        ConfidenceMode::ExactPosterior => {
            let k = generator.num_classes();
            let posterior = generator.bayes_posterior(x);
            let t = spec.true_transition(x, k);
            let numerator = t[(y_noisy, y_noisy)] * posterior[y_noisy];
            let denominator: f64 = (0..k).map(|i| t[(i, y_noisy)] * posterior[i]).sum();
            if denominator < 1e-12 {
                log::warn!(
                    "observed-label probability ~0 at x = {x:?}; confidence set to 0"
                );
                return 0.0;
            }
            numerator / denominator
        }
    }
}

/// Corrupt a clean dataset according to `spec`.
///
/// Features are copied unchanged. Labels flip per the noise kind; CSIDN also
/// attaches confidence scores (which for exact-posterior mode need the
/// generating `CirclesSpec`). Each sample uses its own ChaCha stream, so the
/// result is a pure function of `(dataset, spec)`.
pub fn corrupt(
    dataset: &Dataset,
    spec: &NoiseSpec,
    generator: Option<&CirclesSpec>,
) -> Result<Dataset> {
    let clean = dataset.require_clean()?.to_vec();
    let k = dataset.num_classes;
    let mut validated = spec.clone();
    validated.validate(k)?;
    let spec = &validated;

    if matches!(spec.kind, NoiseKind::CsidnDirectional { confidence_mode: ConfidenceMode::ExactPosterior, .. })
        && generator.is_none()
    {
        return Err(Error::Config(
            "exact-posterior confidence scores need the generating circles spec".into(),
        ));
    }

    let n = dataset.len();
    let mut noisy = Vec::with_capacity(n);
    let mut confidence: Option<Vec<f64>> = match spec.kind {
        NoiseKind::Clean | NoiseKind::CsidnDirectional { .. } => Some(Vec::with_capacity(n)),
        _ => None,
    };

    for i in 0..n {
        let x = dataset.features.row(i);
        let x = x.as_slice().expect("standard layout");
        let y = clean[i];
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(i as u64);
        let y_noisy = match &spec.kind {
            NoiseKind::Clean => y,
            NoiseKind::Ccn { matrix } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut out = k - 1;
                for (j, &p) in matrix[y].iter().enumerate() {
                    acc += p;
                    if u < acc {
                        out = j;
                        break;
                    }
                }
                out
            }
            NoiseKind::IdnDirectional { w, rho }
            | NoiseKind::CsidnDirectional { w, rho, .. } => {
                let p = idn_flip_prob(x, w, *rho);
                let flip: f64 = rng.gen();
                if flip < p {
                    // uniform over the other k - 1 classes
                    let shift = rng.gen_range(0..k - 1);
                    (y + 1 + shift) % k
                } else {
                    y
                }
            }
        };
        noisy.push(y_noisy);
        if let Some(conf) = confidence.as_mut() {
            let r = match &spec.kind {
                NoiseKind::Clean => 1.0,
                _ => compute_confidence(x, y_noisy, spec, generator.expect("checked above")),
            };
            conf.push(r);
        }
    }

    let out = Dataset {
        features: dataset.features.clone(),
        clean_labels: Some(clean),
        noisy_labels: noisy,
        confidence,
        num_classes: k,
    };
    out.validate()?;
    Ok(out)
}
