//! Temperature scaling and expected calibration error.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::nn::loss::softmax_rows;

/// Number of equal-width confidence bins used by [`expected_calibration_error`].
pub const ECE_BINS: usize = 15;

/// Candidate temperatures: 50 log-spaced values in `[0.25, 8]` plus `t = 1`,
/// so calibration can never be worse than the identity temperature.
pub fn temperature_grid() -> Vec<f64> {
    let (lo, hi) = (0.25f64.ln(), 8f64.ln());
    let mut grid: Vec<f64> = (0..50)
        .map(|i| (lo + (hi - lo) * i as f64 / 49.0).exp())
        .collect();
    grid.push(1.0);
    grid
}

/// Softmax of `logits / t`. Requires `t > 0`.
pub fn temperature_scale(logits: &Array2<f64>, t: f64) -> Result<Array2<f64>> {
    if !(t > 0.0) {
        return Err(Error::Config(format!("temperature {t} must be positive")));
    }
    Ok(softmax_rows(&logits.mapv(|z| z / t)))
}

/// Binned gap between max-probability confidence and empirical accuracy,
/// weighted by bin occupancy.
pub fn expected_calibration_error(probs: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    let n = probs.nrows();
    if n == 0 || n != labels.len() {
        return Err(Error::Data(format!(
            "calibration set has {n} prediction rows for {} labels",
            labels.len()
        )));
    }
    let mut count = [0usize; ECE_BINS];
    let mut conf_sum = [0.0f64; ECE_BINS];
    let mut hit_sum = [0.0f64; ECE_BINS];
    for (row, &label) in probs.axis_iter(Axis(0)).zip(labels) {
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        let conf = row[best];
        let bin = ((conf * ECE_BINS as f64) as usize).min(ECE_BINS - 1);
        count[bin] += 1;
        conf_sum[bin] += conf;
        hit_sum[bin] += if best == label { 1.0 } else { 0.0 };
    }
    let mut ece = 0.0;
    for b in 0..ECE_BINS {
        if count[b] > 0 {
            let w = count[b] as f64 / n as f64;
            ece += w * (conf_sum[b] / count[b] as f64 - hit_sum[b] / count[b] as f64).abs();
        }
    }
    Ok(ece)
}

/// Result of [`calibrate`].
#[derive(Debug, Clone, Copy)]
pub struct Calibration {
    pub temperature: f64,
    /// ECE at the selected temperature.
    pub ece: f64,
    /// ECE at `t = 1` (uncalibrated), for reporting.
    pub ece_uncalibrated: f64,
}

/// Pick the grid temperature minimizing ECE on a labelled validation set.
pub fn calibrate(valid_logits: &Array2<f64>, valid_labels: &[usize]) -> Result<Calibration> {
    if valid_logits.nrows() == 0 {
        return Err(Error::Config("calibration requires a nonempty validation set".into()));
    }
    let mut best_t = 1.0;
    let mut best_ece = f64::INFINITY;
    for t in temperature_grid() {
        let probs = temperature_scale(valid_logits, t)?;
        let ece = expected_calibration_error(&probs, valid_labels)?;
        if ece < best_ece {
            best_ece = ece;
            best_t = t;
        }
    }
    let ece_uncalibrated =
        expected_calibration_error(&temperature_scale(valid_logits, 1.0)?, valid_labels)?;
    Ok(Calibration {
        temperature: best_t,
        ece: best_ece,
        ece_uncalibrated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn unit_temperature_is_plain_softmax() {
        let logits = array![[2.0, -1.0, 0.5], [0.0, 0.0, 3.0]];
        assert_eq!(temperature_scale(&logits, 1.0).unwrap(), softmax_rows(&logits));
    }

    #[test]
    fn huge_temperature_flattens_rows() {
        let logits = array![[0.5, -0.5, 0.2]];
        let probs = temperature_scale(&logits, 1e6).unwrap();
        let (min, max) = probs
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(max - min < 1e-6);
    }

    #[test]
    fn nonpositive_temperature_rejected() {
        let logits = array![[1.0, 0.0]];
        assert!(temperature_scale(&logits, 0.0).is_err());
        assert!(temperature_scale(&logits, -2.0).is_err());
    }

    #[test]
    fn grid_contains_unit_and_bounds() {
        let grid = temperature_grid();
        assert_eq!(grid.len(), 51);
        assert!(grid.iter().any(|&t| t == 1.0));
        assert!((grid[0] - 0.25).abs() < 1e-12);
        assert!((grid[49] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_ece_never_exceeds_unit_ece() {
        // Overconfident logits: scaling up the temperature should help, and the
        // selected temperature can never do worse than t = 1.
        let n = 400;
        let mut logits = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            logits[(i, 0)] = 4.0;
            logits[(i, 1)] = 0.0;
            // true accuracy of the argmax class: 75%
            labels.push(if i % 4 == 0 { 1 } else { 0 });
        }
        let cal = calibrate(&logits, &labels).unwrap();
        assert!(cal.ece <= cal.ece_uncalibrated);
        assert!(cal.temperature > 1.0);
    }

    #[test]
    fn empty_validation_set_is_config_error() {
        let logits = Array2::zeros((0, 3));
        assert!(calibrate(&logits, &[]).is_err());
    }

    #[test]
    fn perfectly_calibrated_logits_prefer_identity() {
        // Construct logits whose softmax confidence matches empirical accuracy
        // bin-for-bin; any rescaling must not beat the identity temperature.
        let n = 900;
        let mut logits = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            // target confidence 0.9: logit gap ln(9)
            logits[(i, 0)] = (9.0f64).ln();
            logits[(i, 1)] = 0.0;
            labels.push(if i % 10 == 0 { 1 } else { 0 });
        }
        let cal = calibrate(&logits, &labels).unwrap();
        let probs_unit = temperature_scale(&logits, 1.0).unwrap();
        let ece_unit = expected_calibration_error(&probs_unit, &labels).unwrap();
        assert!(cal.ece <= ece_unit + 1e-12);
        assert!(ece_unit < 1e-9, "constructed set should be calibrated at t=1");
    }
}
