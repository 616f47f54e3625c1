//! Instance-level transition-matrix estimation from confidence scores.
//!
//! For a sample observed as class `i`, the diagonal entry `T[i][i](x)` is the
//! product of the sample's confidence score and the density ratio
//! `beta_i(x) = P(Y_noisy = i | x) / P(Y = i | x)`. Rows without confidence
//! information fall back to the class-level mean `mu_i`. Off-diagonal entries
//! share instance-free class-transition constants `alpha[i][j]`, estimated
//! once from anchor points, so every assembled matrix is row-stochastic by
//! construction.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};

/// Clipping bounds for the density ratio `beta`.
///
/// The lower bound keeps corrected losses finite. The upper bound matters for
/// robustness: a sample's confident diagonal is `r * beta`, so a large cap
/// lets an inflated ratio blow a mildly wrong confidence score up to a fully
/// trusted (and wrong) diagonal. On genuinely confident samples
/// (`r >= 0.5`) the true ratio never exceeds `T_ii / r <= 2`, so capping at 2
/// loses nothing there while damping the damage from noisy scores.
pub const BETA_CLIP: (f64, f64) = (0.05, 2.0);

/// Clipping bounds for diagonal transition estimates.
pub const DIAG_CLIP: (f64, f64) = (1e-3, 1.0);

/// Floor applied to the current-model probability in the beta ratio.
pub const H_FLOOR: f64 = 1e-6;

/// Minimum anchor-mean denominator before a class falls back to a uniform
/// transition row.
pub const ALPHA_DENOM_MIN: f64 = 1e-3;

/// Per-sample density-ratio estimates, indexed by dataset position. Each
/// sample's entry refers to its observed class.
#[derive(Debug, Clone)]
pub struct BetaTable {
    values: Vec<f64>,
}

impl BetaTable {
    /// All ratios start at 1.
    pub fn ones(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Summary statistics for diagnostics dumps.
    pub fn summary(&self) -> BetaSummary {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f) as usize];
        let n = sorted.len() as f64;
        BetaSummary {
            min: sorted[0],
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            max: *sorted.last().expect("non-empty"),
            mean: self.values.iter().sum::<f64>() / n,
            frac_at_lower_clip: self.values.iter().filter(|&&v| v <= BETA_CLIP.0).count() as f64
                / n,
            frac_at_upper_clip: self.values.iter().filter(|&&v| v >= BETA_CLIP.1).count() as f64
                / n,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
    pub frac_at_lower_clip: f64,
    pub frac_at_upper_clip: f64,
}

/// Refresh the ratios of the listed samples of class `class_i`:
/// `beta = h_noisy_i / max(h_i, H_FLOOR)`, clipped to [`BETA_CLIP`].
///
/// Every listed sample must be observed as `class_i`.
pub fn update_beta(
    beta: &mut BetaTable,
    class_i: usize,
    samples: &[usize],
    h_noisy_probs: &Array2<f64>,
    h_probs: &Array2<f64>,
    noisy_labels: &[usize],
) -> Result<()> {
    for &idx in samples {
        if noisy_labels[idx] != class_i {
            return Err(Error::Domain(format!(
                "sample {idx} observed as class {}, not {class_i}",
                noisy_labels[idx]
            )));
        }
        let ratio = h_noisy_probs[(idx, class_i)] / h_probs[(idx, class_i)].max(H_FLOOR);
        beta.values[idx] = ratio.clamp(BETA_CLIP.0, BETA_CLIP.1);
    }
    Ok(())
}

/// Refresh every sample's ratio against its own observed class.
pub fn update_beta_all(
    beta: &mut BetaTable,
    h_noisy_probs: &Array2<f64>,
    h_probs: &Array2<f64>,
    noisy_labels: &[usize],
) {
    for (idx, &y) in noisy_labels.iter().enumerate() {
        let ratio = h_noisy_probs[(idx, y)] / h_probs[(idx, y)].max(H_FLOOR);
        beta.values[idx] = ratio.clamp(BETA_CLIP.0, BETA_CLIP.1);
    }
}

/// Confidence-backed diagonal estimate `clip(r * beta)`.
pub fn diag_confident(r: f64, beta: f64) -> f64 {
    (r * beta).clamp(DIAG_CLIP.0, DIAG_CLIP.1)
}

/// Class-level mean diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct MuVector(pub Vec<f64>);

/// Mean of the raw `r * beta` products, clipped to [`DIAG_CLIP`] at the end.
/// Returns `None` for an empty class.
pub fn mean_diag(rs: &[f64], betas: &[f64]) -> Option<f64> {
    if rs.is_empty() {
        return None;
    }
    let sum: f64 = rs.iter().zip(betas).map(|(r, b)| r * b).sum();
    Some((sum / rs.len() as f64).clamp(DIAG_CLIP.0, DIAG_CLIP.1))
}

/// Per-class mean diagonals over the whole dataset.
///
/// A class with no observed samples falls back to
/// `1 - (k - 1) / k * rho_global`, where `rho_global` is one minus the mean
/// clipped diagonal over all samples, and logs a warning.
pub fn compute_mu(
    noisy_labels: &[usize],
    confidence: &[f64],
    beta: &BetaTable,
    num_classes: usize,
) -> MuVector {
    let mut sums = vec![0.0; num_classes];
    let mut counts = vec![0usize; num_classes];
    let mut global_clipped = 0.0;
    for (idx, &y) in noisy_labels.iter().enumerate() {
        sums[y] += confidence[idx] * beta.get(idx);
        counts[y] += 1;
        global_clipped += diag_confident(confidence[idx], beta.get(idx));
    }
    let rho_global = if noisy_labels.is_empty() {
        0.0
    } else {
        1.0 - global_clipped / noisy_labels.len() as f64
    };
    let k = num_classes as f64;
    let mut mu = Vec::with_capacity(num_classes);
    for class in 0..num_classes {
        if counts[class] == 0 {
            let fallback = (1.0 - (k - 1.0) / k * rho_global).clamp(DIAG_CLIP.0, DIAG_CLIP.1);
            log::warn!(
                "no samples observed as class {class}; mu falls back to {fallback:.4}"
            );
            mu.push(fallback);
        } else {
            mu.push(
                (sums[class] / counts[class] as f64).clamp(DIAG_CLIP.0, DIAG_CLIP.1),
            );
        }
    }
    MuVector(mu)
}

/// Indices of presumed-clean samples, per class.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    per_class: Vec<Vec<usize>>,
}

impl AnchorSet {
    /// User-provided anchors, taken verbatim.
    pub fn from_indices(per_class: Vec<Vec<usize>>) -> Self {
        Self { per_class }
    }

    pub fn class(&self, i: usize) -> &[usize] {
        &self.per_class[i]
    }

    pub fn num_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn validate_nonempty(&self) -> Result<()> {
        for (i, anchors) in self.per_class.iter().enumerate() {
            if anchors.is_empty() {
                return Err(Error::Data(format!("class {i} has no anchor points")));
            }
        }
        Ok(())
    }
}

/// Heuristic anchors: the `m` samples with the largest `h_noisy(x)_i` per
/// class (ties broken by index). Takes all samples with a warning when fewer
/// than `m` exist.
pub fn select_anchors(h_noisy_probs: &Array2<f64>, m: usize) -> AnchorSet {
    let n = h_noisy_probs.nrows();
    let k = h_noisy_probs.ncols();
    let take = if m > n {
        log::warn!("requested {m} anchors per class but only {n} samples exist; taking all");
        n
    } else {
        m
    };
    let mut per_class = Vec::with_capacity(k);
    for class in 0..k {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            h_noisy_probs[(b, class)]
                .partial_cmp(&h_noisy_probs[(a, class)])
                .expect("finite probabilities")
                .then(a.cmp(&b))
        });
        order.truncate(take);
        per_class.push(order);
    }
    AnchorSet { per_class }
}

/// Instance-free class-transition constants with a zero diagonal; rows are
/// normalized so off-diagonal entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    values: Array2<f64>,
}

impl AlphaMatrix {
    /// Uniform transitions `1 / (k - 1)` off the diagonal.
    pub fn uniform(k: usize) -> Self {
        let off = 1.0 / (k as f64 - 1.0);
        Self {
            values: Array2::from_shape_fn((k, k), |(i, j)| if i == j { 0.0 } else { off }),
        }
    }

    /// Build from explicit rows: diagonal zero, off-diagonal entries in
    /// `[0, 1]` summing to one per row.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k < 2 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape {
                location: "alpha matrix".into(),
                expected: k.max(2),
                actual: rows.iter().map(Vec::len).min().unwrap_or(0),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::Domain(format!("alpha diagonal ({i},{i}) must be 0")));
            }
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::Domain(format!("alpha row {i} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "alpha row {i} off-diagonal sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self {
            values: Array2::from_shape_fn((k, k), |(i, j)| rows[i][j]),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn num_classes(&self) -> usize {
        self.values.nrows()
    }
}

/// Diagnostics recorded while estimating alpha.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaDiagnostics {
    /// Clipped per-row estimates before normalization.
    pub raw: Vec<Vec<f64>>,
    /// Absolute deviation of each raw row's off-diagonal sum from 1.
    pub row_deviation: Vec<f64>,
    /// Classes that fell back to a uniform row (degenerate denominator).
    pub degenerate_rows: Vec<usize>,
}

/// Estimate `alpha[i][j]` from anchor points: the anchor mean of
/// `h_noisy(x)_j` over `1 - mean(r * h_noisy(x)_i)`, clipped to `[0, 1]` and
/// row-normalized.
///
/// Near-clean classes (denominator below [`ALPHA_DENOM_MIN`]) fall back to a
/// uniform row with a logged warning.
pub fn estimate_alpha(
    anchors: &AnchorSet,
    h_noisy_probs: &Array2<f64>,
    confidence: &[f64],
) -> Result<(AlphaMatrix, AlphaDiagnostics)> {
    anchors.validate_nonempty()?;
    let k = anchors.num_classes();
    if h_noisy_probs.ncols() != k {
        return Err(Error::Shape {
            location: "h_noisy probabilities".into(),
            expected: k,
            actual: h_noisy_probs.ncols(),
        });
    }
    let mut values = Array2::zeros((k, k));
    let mut diag = AlphaDiagnostics {
        raw: Vec::with_capacity(k),
        row_deviation: Vec::with_capacity(k),
        degenerate_rows: Vec::new(),
    };
    let uniform = 1.0 / (k as f64 - 1.0);
    for i in 0..k {
        let idxs = anchors.class(i);
        let inv = 1.0 / idxs.len() as f64;
        let mut mean_probs = vec![0.0; k];
        let mut mean_kept = 0.0;
        for &idx in idxs {
            for j in 0..k {
                mean_probs[j] += h_noisy_probs[(idx, j)] * inv;
            }
            mean_kept += confidence[idx] * h_noisy_probs[(idx, i)] * inv;
        }
        let denominator = 1.0 - mean_kept;
        if denominator < ALPHA_DENOM_MIN {
            log::warn!(
                "class {i} looks nearly clean (alpha denominator {denominator:.2e}); \
                 using uniform transitions"
            );
            diag.raw.push(vec![0.0; k]);
            diag.row_deviation.push(1.0);
            diag.degenerate_rows.push(i);
            for j in 0..k {
                values[(i, j)] = if i == j { 0.0 } else { uniform };
            }
            continue;
        }
        let mut raw: Vec<f64> = (0..k)
            .map(|j| {
                if i == j {
                    0.0
                } else {
                    (mean_probs[j] / denominator).clamp(0.0, 1.0)
                }
            })
            .collect();
        let row_sum: f64 = raw.iter().sum();
        diag.row_deviation.push((row_sum - 1.0).abs());
        diag.raw.push(raw.clone());
        if row_sum <= 0.0 {
            log::warn!("class {i} alpha row vanished after clipping; using uniform transitions");
            diag.degenerate_rows.push(i);
            raw = (0..k).map(|j| if i == j { 0.0 } else { uniform }).collect();
        } else {
            for v in raw.iter_mut() {
                *v /= row_sum;
            }
        }
        log::debug!(
            "alpha row {i}: off-diagonal sum deviated from 1 by {:.3e} before normalization",
            diag.row_deviation[i]
        );
        for j in 0..k {
            values[(i, j)] = raw[j];
        }
    }
    Ok((AlphaMatrix { values }, diag))
}

/// Assemble the full `k x k` transition matrix for one sample.
///
/// Row `observed_class` uses the confidence-backed diagonal; every other row
/// `c` uses `mu[c]`. Off-diagonals are `alpha[c][j] * (1 - T[c][c])`, so each
/// row sums to one exactly.
pub fn assemble_transition(
    observed_class: usize,
    diag_observed: f64,
    mu: &MuVector,
    alpha: &AlphaMatrix,
) -> Array2<f64> {
    let k = alpha.num_classes();
    debug_assert_eq!(mu.0.len(), k);
    debug_assert!(observed_class < k);
    let mut t = Array2::zeros((k, k));
    for c in 0..k {
        let d = if c == observed_class {
            diag_observed
        } else {
            mu.0[c]
        };
        let remainder = 1.0 - d;
        for j in 0..k {
            t[(c, j)] = if c == j {
                d
            } else {
                alpha.get(c, j) * remainder
            };
        }
    }
    t
}

/// Epoch-indexed estimation diagnostics, serialized as JSON by the trainers.
#[derive(Debug, Clone, Serialize)]
pub struct EstimationDiagnostics {
    pub alpha_raw: Vec<Vec<f64>>,
    pub alpha_normalized: Vec<Vec<f64>>,
    pub alpha_row_deviation: Vec<f64>,
    pub alpha_degenerate_rows: Vec<usize>,
    pub mu_per_epoch: Vec<Vec<f64>>,
    pub beta_summary_per_epoch: Vec<BetaSummary>,
}

impl EstimationDiagnostics {
    pub fn new(alpha: &AlphaMatrix, diag: &AlphaDiagnostics) -> Self {
        Self {
            alpha_raw: diag.raw.clone(),
            alpha_normalized: alpha
                .matrix()
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            alpha_row_deviation: diag.row_deviation.clone(),
            alpha_degenerate_rows: diag.degenerate_rows.clone(),
            mu_per_epoch: Vec::new(),
            beta_summary_per_epoch: Vec::new(),
        }
    }

    pub fn record_epoch(&mut self, mu: &MuVector, beta: &BetaTable) {
        self.mu_per_epoch.push(mu.0.clone());
        self.beta_summary_per_epoch.push(beta.summary());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn beta_update_rules() {
        let h_noisy = array![[0.6, 0.4], [0.5, 0.5], [1.0, 0.0]];
        let h = array![[0.3, 0.7], [0.5, 0.5], [1e-9, 1.0]];
        let labels = vec![0, 0, 0];
        let mut beta = BetaTable::ones(3);
        update_beta(&mut beta, 0, &[0, 1, 2], &h_noisy, &h, &labels).unwrap();
        assert_relative_eq!(beta.get(0), 2.0);
        assert_relative_eq!(beta.get(1), 1.0);
        // h floored at 1e-6, then the ratio hits the upper clip
        assert_relative_eq!(beta.get(2), BETA_CLIP.1);
    }

    #[test]
    fn beta_update_rejects_wrong_class() {
        let h = array![[0.5, 0.5]];
        let mut beta = BetaTable::ones(1);
        let err = update_beta(&mut beta, 1, &[0], &h, &h, &[0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn diag_confident_clipping() {
        assert_relative_eq!(diag_confident(0.9, 1.0), 0.9);
        assert_relative_eq!(diag_confident(0.8, 1.5), 1.0); // clip above
        assert_relative_eq!(diag_confident(0.0, 1.7), DIAG_CLIP.0); // floor
    }

    #[test]
    fn mean_diag_values() {
        assert_relative_eq!(mean_diag(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(mean_diag(&[0.6, 0.8], &[1.0, 1.0]).unwrap(), 0.7);
        assert!(mean_diag(&[], &[]).is_none());
    }

    #[test]
    fn mean_diag_order_invariant() {
        let a = mean_diag(&[0.2, 0.9, 0.55], &[1.1, 0.7, 1.0]).unwrap();
        let b = mean_diag(&[0.9, 0.55, 0.2], &[0.7, 1.0, 1.1]).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-15);
    }

    #[test]
    fn mu_fallback_for_missing_class() {
        let labels = vec![0, 0, 1, 1];
        let conf = vec![1.0, 1.0, 1.0, 1.0];
        let beta = BetaTable::ones(4);
        let mu = compute_mu(&labels, &conf, &beta, 3);
        assert_relative_eq!(mu.0[0], 1.0);
        assert_relative_eq!(mu.0[1], 1.0);
        // rho_global = 0 here, so the missing class falls back to 1.
        assert_relative_eq!(mu.0[2], 1.0);
    }

    #[test]
    fn anchor_selection_picks_argmax_and_passthrough() {
        let probs = array![[0.9, 0.1], [0.2, 0.8], [0.6, 0.4], [0.1, 0.9]];
        let anchors = select_anchors(&probs, 1);
        assert_eq!(anchors.class(0), &[0]);
        assert_eq!(anchors.class(1), &[3]);
        let user = AnchorSet::from_indices(vec![vec![2], vec![0]]);
        assert_eq!(user.class(0), &[2]);
        assert_eq!(user.class(1), &[0]);
    }

    #[test]
    fn anchor_selection_caps_at_dataset_size() {
        let probs = array![[0.9, 0.1], [0.2, 0.8]];
        let anchors = select_anchors(&probs, 10);
        assert_eq!(anchors.class(0).len(), 2);
    }

    #[test]
    fn alpha_arithmetic_example() {
        // anchor means: h_noisy_j = 0.2, r * h_noisy_i = 0.6 -> alpha = 0.5
        let probs = array![[0.6, 0.2, 0.2]];
        let conf = vec![1.0];
        let anchors = AnchorSet::from_indices(vec![vec![0], vec![0], vec![0]]);
        let (alpha, _) = estimate_alpha(&anchors, &probs, &conf).unwrap();
        assert_relative_eq!(alpha.get(0, 1), 0.5);
        assert_relative_eq!(alpha.get(0, 2), 0.5);
        assert_relative_eq!(alpha.get(0, 0), 0.0);
    }

    #[test]
    fn clean_data_degenerates_to_uniform_alpha() {
        let probs = array![[1.0, 0.0], [0.0, 1.0]];
        let conf = vec![1.0, 1.0];
        let anchors = AnchorSet::from_indices(vec![vec![0], vec![1]]);
        let (alpha, diag) = estimate_alpha(&anchors, &probs, &conf).unwrap();
        assert_eq!(diag.degenerate_rows, vec![0, 1]);
        assert_relative_eq!(alpha.get(0, 1), 1.0);
        assert_relative_eq!(alpha.get(1, 0), 1.0);
    }

    #[test]
    fn assembled_matrix_examples() {
        // All diagonals 1: identity.
        let alpha = AlphaMatrix::uniform(3);
        let mu = MuVector(vec![1.0, 1.0, 1.0]);
        let t = assemble_transition(0, 1.0, &mu, &alpha);
        assert_eq!(t, Array2::<f64>::eye(3));

        // Two classes force alpha = 1 off-diagonal.
        let alpha2 = AlphaMatrix::uniform(2);
        let mu2 = MuVector(vec![0.5, 0.9]);
        let t2 = assemble_transition(0, 0.8, &mu2, &alpha2);
        assert_relative_eq!(t2[(0, 0)], 0.8);
        assert_relative_eq!(t2[(0, 1)], 0.2);
        assert_relative_eq!(t2[(1, 0)], 0.1, max_relative = 1e-12);
        assert_relative_eq!(t2[(1, 1)], 0.9);

        // Uniform alpha, diagonal 0.7 everywhere: off-diagonals 0.15.
        let mu3 = MuVector(vec![0.7, 0.7, 0.7]);
        let t3 = assemble_transition(1, 0.7, &mu3, &alpha);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.7 } else { 0.15 };
                assert_relative_eq!(t3[(i, j)], expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn assembled_rows_are_stochastic() {
        // Randomized check mirrors the larger acceptance sweep.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let k = rng.gen_range(2..6);
            let mut alpha_rows = Vec::with_capacity(k);
            for i in 0..k {
                let mut row: Vec<f64> = (0..k)
                    .map(|j| if i == j { 0.0 } else { rng.gen_range(0.01..1.0) })
                    .collect();
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                alpha_rows.push(row);
            }
            let alpha = AlphaMatrix {
                values: Array2::from_shape_fn((k, k), |(i, j)| alpha_rows[i][j]),
            };
            let mu = MuVector((0..k).map(|_| rng.gen_range(DIAG_CLIP.0..1.0)).collect());
            let obs = rng.gen_range(0..k);
            let diag = diag_confident(rng.gen_range(0.0..1.0), rng.gen_range(0.05..2.0));
            let t = assemble_transition(obs, diag, &mu, &alpha);
            for i in 0..k {
                let sum: f64 = (0..k).map(|j| t[(i, j)]).sum();
                assert!((sum - 1.0).abs() < 1e-9, "row {i} sums to {sum}");
                assert!((0..k).all(|j| (0.0..=1.0).contains(&t[(i, j)])));
            }
        }
    }
}
