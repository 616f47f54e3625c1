//! Co-teaching: two peer networks exchanging small-loss instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::data::Dataset;
use crate::error::Result;
use crate::nn::loss::LossKind;
use crate::nn::{backward_and_step, MLPModel, OptimizerState};
use crate::train::{
    accuracy, gather_rows, per_sample_ce, resolve_forget_rate, shuffled_batches, Method,
    RunResult, TrainConfig,
};
use crate::util::derive_seed;

/// Keep rate `R(T) = 1 - min(T / ramp, 1) * tau` for 1-based epoch `T`.
pub fn keep_rate(epoch: usize, ramp_epochs: usize, tau: f64) -> f64 {
    1.0 - (epoch as f64 / ramp_epochs as f64).min(1.0) * tau
}

/// Positions of the `ceil(fraction * n)` smallest losses (ties broken by
/// position, at least one element), returned in ascending position order so
/// that selecting everything reproduces the original batch exactly.
pub fn select_small_loss(losses: &[f64], fraction: f64) -> Vec<usize> {
    let n = losses.len();
    let count = ((fraction * n as f64).ceil() as usize).clamp(1, n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        losses[a]
            .partial_cmp(&losses[b])
            .expect("finite losses")
            .then(a.cmp(&b))
    });
    order.truncate(count);
    order.sort_unstable();
    order
}

#[derive(Debug)]
pub struct CoTeachingOutcome {
    /// The reported model (metrics in `result` track this one).
    pub model: MLPModel,
    pub peer: MLPModel,
    pub result: RunResult,
    /// Instances each model trained on per epoch, for the selected-fraction
    /// bookkeeping.
    pub selected_per_epoch: Vec<usize>,
}

/// Train two independently initialized networks; each epoch, each network
/// ranks the batch by its own loss and feeds its smallest-loss instances to
/// the peer for the update.
pub fn train_coteaching(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<CoTeachingOutcome> {
    cfg.validate()?;
    train.validate()?;
    let start = Instant::now();
    let tau = resolve_forget_rate(cfg, train);
    let k = train.num_classes;
    let n = train.len();
    let dims = cfg.layer_dims(train.dim(), k);
    let mut model_a = MLPModel::new(&dims, cfg.seed)?;
    let mut model_b = MLPModel::new(&dims, derive_seed(cfg.seed, 0x7065_6572))?;
    let mut opt_a = OptimizerState::new(cfg.learning_rate, cfg.momentum)?;
    let mut opt_b = OptimizerState::new(cfg.learning_rate, cfg.momentum)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));

    let mut result = RunResult {
        method: Method::Coteaching.name().into(),
        seed: cfg.seed,
        config_hash: String::new(),
        train_loss: Vec::with_capacity(cfg.epochs),
        train_acc: Vec::with_capacity(cfg.epochs),
        test_acc: Vec::with_capacity(cfg.epochs),
        wall_time_s: 0.0,
        measured_noise_rate: train.measured_noise_rate(),
        model_path: None,
    };
    let mut selected_per_epoch = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let rate = keep_rate(epoch, cfg.forget_ramp_epochs, tau);
        let mut loss_sum = 0.0;
        let mut selected = 0usize;
        for batch in shuffled_batches(n, cfg.batch_size, &mut shuffle_rng) {
            let xb = gather_rows(&train.features, &batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train.noisy_labels[i]).collect();
            // Both selections come from the pre-update parameters.
            let losses_a = per_sample_ce(&model_a, &xb, &yb)?;
            let losses_b = per_sample_ce(&model_b, &xb, &yb)?;
            loss_sum += losses_a.iter().sum::<f64>();
            let sel_a = select_small_loss(&losses_a, rate);
            let sel_b = select_small_loss(&losses_b, rate);
            selected += sel_b.len();

            // Each model learns from the instances its peer trusts.
            for (model, opt, sel) in [
                (&mut model_a, &mut opt_a, &sel_b),
                (&mut model_b, &mut opt_b, &sel_a),
            ] {
                let rows: Vec<usize> = sel.iter().map(|&j| batch[j]).collect();
                let xs = gather_rows(&train.features, &rows);
                let ys: Vec<usize> = rows.iter().map(|&i| train.noisy_labels[i]).collect();
                backward_and_step(model, &xs, &ys, LossKind::CrossEntropy, None, opt)?;
            }
        }
        opt_a.epochs_completed += 1;
        opt_b.epochs_completed += 1;
        selected_per_epoch.push(selected);
        result.train_loss.push(loss_sum / n as f64);
        result
            .train_acc
            .push(accuracy(&model_a, &train.features, &train.noisy_labels)?);
        result
            .test_acc
            .push(accuracy(&model_a, &test.features, &test.noisy_labels)?);
    }

    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(CoTeachingOutcome {
        model: model_a,
        peer: model_b,
        result,
        selected_per_epoch,
    })
}
