//! Instance-level forward correction.
//!
//! Procedure: train a naive classifier on the noisy labels and freeze it;
//! estimate the class-transition constants `alpha` once from anchor points;
//! start all density ratios at 1. Then per epoch: compute the class means
//! `mu`, train one pass with the per-sample corrected loss (each sample's
//! matrix assembled from its confidence-backed diagonal, the `mu` diagonals
//! elsewhere, and the shared `alpha` off-diagonals), and refresh the ratios
//! from the frozen noisy posterior over the current model.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::data::Dataset;
use crate::error::Result;
use crate::estimate::{
    assemble_transition, compute_mu, diag_confident, estimate_alpha, select_anchors,
    update_beta_all, AnchorSet, BetaTable, EstimationDiagnostics,
};
use crate::nn::loss::LossKind;
use crate::nn::{backward_and_step, MLPModel, OptimizerState};
use crate::train::naive::train_noisy_reference;
use crate::train::{accuracy, gather_rows, shuffled_batches, Method, RunResult, TrainConfig};
use crate::util::derive_seed;

#[derive(Debug)]
pub struct IlfcOutcome {
    pub model: MLPModel,
    pub result: RunResult,
    /// The frozen naive classifier.
    pub noisy_model: MLPModel,
    pub diagnostics: EstimationDiagnostics,
}

/// Train with instance-level forward correction.
///
/// The dataset must carry confidence scores. Anchors are selected from the
/// naive classifier unless provided.
pub fn train_ilfc(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    anchors: Option<&AnchorSet>,
) -> Result<IlfcOutcome> {
    cfg.validate()?;
    train.validate()?;
    let confidence = train.require_confidence()?.to_vec();
    let start = Instant::now();
    let k = train.num_classes;
    let n = train.len();

    // (1) naive classifier on the noisy labels, then frozen
    let reference = train_noisy_reference(train, test, cfg)?;
    let h_noisy_probs = reference.train_probs.clone();

    // (2) alpha once, from anchors
    let selected;
    let anchor_set = match anchors {
        Some(a) => a,
        None => {
            selected = select_anchors(&h_noisy_probs, cfg.anchors_per_class);
            &selected
        }
    };
    let (alpha, alpha_diag) = estimate_alpha(anchor_set, &h_noisy_probs, &confidence)?;
    let mut diagnostics = EstimationDiagnostics::new(&alpha, &alpha_diag);

    // (3) all ratios start at 1
    let mut beta = BetaTable::ones(n);

    let mut model = MLPModel::new(&cfg.layer_dims(train.dim(), k), cfg.seed)?;
    let mut opt = OptimizerState::new(cfg.learning_rate, cfg.momentum)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));

    let mut result = RunResult {
        method: Method::Ilfc.name().into(),
        seed: cfg.seed,
        config_hash: String::new(),
        train_loss: Vec::with_capacity(cfg.epochs),
        train_acc: Vec::with_capacity(cfg.epochs),
        test_acc: Vec::with_capacity(cfg.epochs),
        wall_time_s: 0.0,
        measured_noise_rate: train.measured_noise_rate(),
        model_path: None,
    };

    for _epoch in 0..cfg.epochs {
        // (4) class-mean diagonals from the raw r * beta products
        let mu = compute_mu(&train.noisy_labels, &confidence, &beta, k);
        diagnostics.record_epoch(&mu, &beta);

        // (5)-(7) per-sample corrected training
        let mut loss_sum = 0.0;
        for batch in shuffled_batches(n, cfg.batch_size, &mut shuffle_rng) {
            let xb = gather_rows(&train.features, &batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train.noisy_labels[i]).collect();
            let ts: Vec<Array2<f64>> = batch
                .iter()
                .map(|&i| {
                    let d = diag_confident(confidence[i], beta.get(i));
                    assemble_transition(train.noisy_labels[i], d, &mu, &alpha)
                })
                .collect();
            let loss = backward_and_step(
                &mut model,
                &xb,
                &yb,
                LossKind::ForwardCorrected,
                Some(&ts),
                &mut opt,
            )?;
            loss_sum += loss * batch.len() as f64;
        }
        opt.epochs_completed += 1;

        // (8) refresh the density ratios against the current model
        let h_probs = model.forward(&train.features)?;
        update_beta_all(&mut beta, &h_noisy_probs, &h_probs, &train.noisy_labels);

        result.train_loss.push(loss_sum / n as f64);
        result
            .train_acc
            .push(accuracy(&model, &train.features, &train.noisy_labels)?);
        result
            .test_acc
            .push(accuracy(&model, &test.features, &test.noisy_labels)?);
    }

    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(IlfcOutcome {
        model,
        result,
        noisy_model: reference.model,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{corrupt, CirclesSpec, ConfidenceMode, NoiseSpec};
    use crate::train::train_naive;

    #[test]
    fn missing_confidence_is_schema_error() {
        let gen = CirclesSpec {
            per_class: 20,
            ..CirclesSpec::default()
        };
        let ds = gen.generate().unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_ilfc(&ds, &ds, &cfg, None).unwrap_err(),
            crate::error::Error::Schema(_)
        ));
    }

    #[test]
    fn clean_data_stays_close_to_plain_cross_entropy() {
        let gen = CirclesSpec {
            per_class: 200,
            seed: 11,
            ..CirclesSpec::default()
        };
        let clean = gen.generate().unwrap();
        let spec = NoiseSpec::csidn(vec![0.0, 1.0], 0.0, ConfidenceMode::ExactPosterior, 3);
        let data = corrupt(&clean, &spec, Some(&gen)).unwrap();
        let test = gen.with_samples(150, 12).generate().unwrap();
        let cfg = TrainConfig {
            epochs: 25,
            ..TrainConfig::default()
        };
        let (_, ce) = train_naive(&data, &test, &cfg).unwrap();
        let ilfc = train_ilfc(&data, &test, &cfg, None).unwrap();
        let gap = (ce.final_test_acc() - ilfc.result.final_test_acc()).abs();
        assert!(gap <= 0.02, "clean-degeneracy gap {gap}");
    }

    #[test]
    fn diagnostics_cover_every_epoch() {
        let gen = CirclesSpec {
            per_class: 60,
            seed: 4,
            ..CirclesSpec::default()
        };
        let clean = gen.generate().unwrap();
        let spec = NoiseSpec::csidn(vec![0.0, 1.0], 0.6, ConfidenceMode::ExactPosterior, 8);
        let data = corrupt(&clean, &spec, Some(&gen)).unwrap();
        let test = gen.with_samples(30, 5).generate().unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        let out = train_ilfc(&data, &test, &cfg, None).unwrap();
        assert_eq!(out.diagnostics.mu_per_epoch.len(), 3);
        assert_eq!(out.diagnostics.beta_summary_per_epoch.len(), 3);
        assert_eq!(out.diagnostics.alpha_normalized.len(), 3);
        let json = serde_json::to_string(&out.diagnostics).unwrap();
        assert!(json.contains("alpha_normalized"));
    }
}
