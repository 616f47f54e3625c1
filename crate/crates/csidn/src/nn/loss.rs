//! Classification losses over softmax probabilities.
//!
//! All losses consume a probability vector (not logits). The forward-corrected
//! loss first mixes the prediction through a row-stochastic transition matrix:
//! `corrected_j = sum_i T[i][j] * p_i`, then applies cross-entropy at the
//! observed label.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_FLOOR, 1]` before logarithms so every
/// loss stays finite.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance for validating that transition-matrix rows sum to one.
pub const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    CrossEntropy,
    /// L1 distance to the one-hot target, `2 * (1 - p_y)`.
    Mae,
    /// Negative Box-Cox loss `(1 - p_y^q) / q`, `q` in `(0, 1]`.
    Lq { q: f64 },
    /// Cross-entropy applied to the transition-corrected prediction.
    ForwardCorrected,
}

impl LossKind {
    pub fn validate(&self) -> Result<()> {
        if let LossKind::Lq { q } = self {
            if !(*q > 0.0 && *q <= 1.0) {
                return Err(Error::Config(format!("lq exponent q={q} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn requires_transition(&self) -> bool {
        matches!(self, LossKind::ForwardCorrected)
    }
}

/// Row-wise softmax with max-subtraction; each entry is clamped to
/// `[PROB_FLOOR, 1]` so downstream logarithms stay finite. Row sums remain
/// within 1e-9 of one.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|e| (e / sum).clamp(PROB_FLOOR, 1.0));
    }
    out
}

fn check_label(label: usize, k: usize) -> Result<()> {
    if label >= k {
        return Err(Error::Domain(format!(
            "label {label} out of range for {k} classes"
        )));
    }
    Ok(())
}

/// Validate that `t` is a k x k row-stochastic matrix.
pub fn check_row_stochastic(t: &ArrayView2<f64>, k: usize) -> Result<()> {
    if t.nrows() != k || t.ncols() != k {
        return Err(Error::Shape {
            location: "transition matrix".into(),
            expected: k,
            actual: t.nrows().max(t.ncols()),
        });
    }
    for (i, row) in t.axis_iter(Axis(0)).enumerate() {
        if row.iter().any(|&v| !(-1e-9..=1.0 + 1e-9).contains(&v)) {
            return Err(Error::Domain(format!(
                "transition matrix row {i} has entries outside [0, 1]"
            )));
        }
        let sum = row.sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Domain(format!(
                "transition matrix row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

/// Corrected prediction `q_j = sum_i T[i][j] * p_i` (the noisy-posterior mix
/// of the clean prediction).
pub fn corrected_prediction(t: &ArrayView2<f64>, probs: &ArrayView1<f64>) -> Array1<f64> {
    t.t().dot(probs)
}

/// Loss for a single prediction.
///
/// `transition` is required exactly when `kind` is forward-corrected and must
/// be row-stochastic.
pub fn loss(
    kind: LossKind,
    probs: &ArrayView1<f64>,
    label: usize,
    transition: Option<&ArrayView2<f64>>,
) -> Result<f64> {
    kind.validate()?;
    let k = probs.len();
    check_label(label, k)?;
    match kind {
        LossKind::CrossEntropy => Ok(-probs[label].clamp(PROB_FLOOR, 1.0).ln()),
        LossKind::Mae => Ok(2.0 * (1.0 - probs[label])),
        LossKind::Lq { q } => Ok((1.0 - probs[label].powf(q)) / q),
        LossKind::ForwardCorrected => {
            let t = transition.ok_or_else(|| {
                Error::Config("forward-corrected loss requires a transition matrix".into())
            })?;
            check_row_stochastic(t, k)?;
            let corrected = corrected_prediction(t, probs);
            Ok(-corrected[label].clamp(PROB_FLOOR, 1.0).ln())
        }
    }
}

/// Gradient of [`loss`] with respect to the probability vector.
///
/// Validation is assumed done by the caller (the training loop validates once
/// per batch); the returned vector has an entry per class.
pub(crate) fn loss_grad_probs(
    kind: LossKind,
    probs: &ArrayView1<f64>,
    label: usize,
    transition: Option<&ArrayView2<f64>>,
) -> Array1<f64> {
    let k = probs.len();
    let mut g = Array1::zeros(k);
    match kind {
        LossKind::CrossEntropy => {
            let p = probs[label];
            if p > PROB_FLOOR {
                g[label] = -1.0 / p;
            }
        }
        LossKind::Mae => g[label] = -2.0,
        LossKind::Lq { q } => g[label] = -probs[label].powf(q - 1.0),
        LossKind::ForwardCorrected => {
            let t = transition.expect("transition checked by caller");
            let corrected = corrected_prediction(t, probs);
            let qy = corrected[label];
            if qy > PROB_FLOOR {
                for i in 0..k {
                    g[i] = -t[(i, label)] / qy;
                }
            }
        }
    }
    g
}

/// Chain a probability-space gradient through the softmax Jacobian:
/// `dL/dz_i = p_i * (g_i - sum_j g_j p_j)`.
pub(crate) fn softmax_backward(probs: &ArrayView1<f64>, g: &ArrayView1<f64>) -> Array1<f64> {
    let inner: f64 = g.iter().zip(probs.iter()).map(|(a, b)| a * b).sum();
    Array1::from_iter(probs.iter().zip(g.iter()).map(|(&p, &gi)| p * (gi - inner)))
}
