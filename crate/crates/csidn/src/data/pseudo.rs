//! Automatic-annotation pipeline: train on a small curated subset, calibrate
//! the temperature on a validation split, then pseudo-label a pool with the
//! calibrated argmax and keep the calibrated max probability as the
//! confidence score.

use serde::Serialize;

use crate::data::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{calibrate, temperature_scale, Calibration, MLPModel};
use crate::train::{train_naive, TrainConfig};

#[derive(Debug, Serialize)]
pub struct PseudoLabelReport {
    pub temperature: f64,
    pub ece_calibrated: f64,
    pub ece_uncalibrated: f64,
    /// Disagreement between pseudo-labels and the pool's ground truth, when
    /// the pool carries clean labels.
    pub empirical_noise_rate: Option<f64>,
    pub mean_confidence: f64,
}

#[derive(Debug)]
pub struct PseudoLabelOutcome {
    /// The pool, relabeled with pseudo-labels and confidence scores.
    pub dataset: Dataset,
    pub model: MLPModel,
    pub calibration: Calibration,
    pub report: PseudoLabelReport,
}

/// Label `pool` with a classifier trained on `clean_subset` and calibrated on
/// `valid`.
///
/// `force_unit_temperature` skips the calibration choice (t = 1), for
/// comparing against the uncalibrated pipeline.
pub fn pseudo_label_pipeline(
    clean_subset: &Dataset,
    valid: &Dataset,
    pool: &Dataset,
    cfg: &TrainConfig,
    force_unit_temperature: bool,
) -> Result<PseudoLabelOutcome> {
    for (name, part) in [("clean subset", clean_subset), ("validation set", valid)] {
        if part.is_empty() {
            return Err(Error::Config(format!("{name} must be nonempty")));
        }
    }
    if clean_subset.dim() != valid.dim() || clean_subset.dim() != pool.dim() {
        return Err(Error::Config("splits disagree on feature dimension".into()));
    }
    let k = pool.num_classes.max(clean_subset.num_classes);
    for class in 0..k {
        if !clean_subset.noisy_labels.contains(&class) {
            return Err(Error::Config(format!(
                "class {class} has no examples in the clean subset"
            )));
        }
    }

    // (1) classifier on the curated subset
    let (model, _) = train_naive(clean_subset, valid, cfg)?;

    // (2) temperature from the validation split
    let valid_logits = model.logits(&valid.features)?;
    let mut cal = calibrate(&valid_logits, &valid.noisy_labels)?;
    if force_unit_temperature {
        cal.temperature = 1.0;
        cal.ece = cal.ece_uncalibrated;
    }

    // (3) calibrated argmax + max probability over the pool
    let pool_logits = model.logits(&pool.features)?;
    let probs = temperature_scale(&pool_logits, cal.temperature)?;
    let n = pool.len();
    let mut labels = Vec::with_capacity(n);
    let mut confidence = Vec::with_capacity(n);
    for row in probs.rows() {
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = j;
            }
        }
        labels.push(best);
        confidence.push(row[best]);
    }
    let mean_confidence = confidence.iter().sum::<f64>() / n.max(1) as f64;
    let dataset = Dataset {
        features: pool.features.clone(),
        clean_labels: pool.clean_labels.clone(),
        noisy_labels: labels,
        confidence: Some(confidence),
        num_classes: k,
    };
    dataset.validate()?;
    let report = PseudoLabelReport {
        temperature: cal.temperature,
        ece_calibrated: cal.ece,
        ece_uncalibrated: cal.ece_uncalibrated,
        empirical_noise_rate: dataset.measured_noise_rate(),
        mean_confidence,
    };
    Ok(PseudoLabelOutcome {
        dataset,
        model,
        calibration: cal,
        report,
    })
}
