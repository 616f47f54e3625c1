//! Forward correction with one fixed transition matrix.
//!
//! The matrix is estimated before training: row `i` is the anchor mean of the
//! naive classifier's probability vector over class-`i` anchors (a mean of
//! probability vectors, hence row-stochastic).

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::data::Dataset;
use crate::error::Result;
use crate::estimate::{select_anchors, AnchorSet};
use crate::nn::loss::LossKind;
use crate::nn::{backward_and_step, MLPModel, OptimizerState};
use crate::train::naive::train_noisy_reference;
use crate::train::{accuracy, gather_rows, shuffled_batches, Method, RunResult, TrainConfig};
use crate::util::derive_seed;

#[derive(Debug)]
pub struct FcOutcome {
    pub model: MLPModel,
    pub result: RunResult,
    /// The fixed transition estimate used for every sample.
    pub transition: Array2<f64>,
}

/// Estimate a global transition matrix from anchors of `h_noisy_probs`.
pub fn estimate_global_transition(
    anchors: &AnchorSet,
    h_noisy_probs: &Array2<f64>,
) -> Result<Array2<f64>> {
    anchors.validate_nonempty()?;
    let k = anchors.num_classes();
    let mut t = Array2::zeros((k, k));
    for i in 0..k {
        let idxs = anchors.class(i);
        let inv = 1.0 / idxs.len() as f64;
        for &idx in idxs {
            for j in 0..k {
                t[(i, j)] += h_noisy_probs[(idx, j)] * inv;
            }
        }
    }
    Ok(t)
}

/// Fixed-matrix forward-corrected training.
pub fn train_fc(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    anchors: Option<&AnchorSet>,
) -> Result<FcOutcome> {
    cfg.validate()?;
    train.validate()?;
    let start = Instant::now();
    let k = train.num_classes;
    let n = train.len();

    let reference = train_noisy_reference(train, test, cfg)?;
    let h_noisy_probs = reference.train_probs;
    let selected;
    let anchor_set = match anchors {
        Some(a) => a,
        None => {
            selected = select_anchors(&h_noisy_probs, cfg.anchors_per_class);
            &selected
        }
    };
    let transition = estimate_global_transition(anchor_set, &h_noisy_probs)?;

    let mut model = MLPModel::new(&cfg.layer_dims(train.dim(), k), cfg.seed)?;
    let mut opt = OptimizerState::new(cfg.learning_rate, cfg.momentum)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut result = RunResult {
        method: Method::Fc.name().into(),
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
        let mut loss_sum = 0.0;
        for batch in shuffled_batches(n, cfg.batch_size, &mut shuffle_rng) {
            let xb = gather_rows(&train.features, &batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train.noisy_labels[i]).collect();
            let ts = vec![transition.clone(); batch.len()];
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
        result.train_loss.push(loss_sum / n as f64);
        result
            .train_acc
            .push(accuracy(&model, &train.features, &train.noisy_labels)?);
        result
            .test_acc
            .push(accuracy(&model, &test.features, &test.noisy_labels)?);
    }

    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(FcOutcome {
        model,
        result,
        transition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn anchor_mean_transition_is_row_stochastic() {
        let probs = array![
            [0.7, 0.2, 0.1],
            [0.6, 0.25, 0.15],
            [0.1, 0.8, 0.1],
            [0.2, 0.1, 0.7]
        ];
        let anchors = AnchorSet::from_indices(vec![vec![0, 1], vec![2], vec![3]]);
        let t = estimate_global_transition(&anchors, &probs).unwrap();
        for i in 0..3 {
            let sum: f64 = (0..3).map(|j| t[(i, j)]).sum();
            assert_relative_eq!(sum, 1.0, max_relative = 1e-12);
        }
        assert_relative_eq!(t[(0, 0)], 0.65);
    }

    #[test]
    fn identity_transition_reduces_to_cross_entropy() {
        use crate::data::CirclesSpec;
        use crate::train::train_naive;
        // Clean data: anchors are one-hot-ish, the matrix is near identity,
        // and FC behaves like plain CE.
        let gen = CirclesSpec {
            per_class: 150,
            seed: 21,
            ..CirclesSpec::default()
        };
        let train = gen.generate().unwrap();
        let test = gen.with_samples(100, 22).generate().unwrap();
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let (_, ce) = train_naive(&train, &test, &cfg).unwrap();
        let fc = train_fc(&train, &test, &cfg, None).unwrap();
        assert!((ce.final_test_acc() - fc.result.final_test_acc()).abs() < 0.03);
        for i in 0..3 {
            assert!(fc.transition[(i, i)] > 0.9);
        }
    }
}
