//! Training loops: the naive noisy classifier, instance-level forward
//! correction, and the baseline methods.

mod coteaching;
mod fc;
mod ilfc;
mod naive;

pub use coteaching::{keep_rate, select_small_loss, train_coteaching, CoTeachingOutcome};
pub use fc::{train_fc, FcOutcome};
pub use ilfc::{train_ilfc, IlfcOutcome};
pub use naive::{train_baseline_loss, train_naive, train_noisy_reference, NoisyReference};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::loss::{LossKind, PROB_FLOOR};
use crate::nn::{backward_and_step, MLPModel, OptimizerState};
use crate::util::derive_seed;

/// Training method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain cross-entropy on the observed labels.
    Naive,
    /// Instance-level forward correction.
    Ilfc,
    /// Forward correction with one fixed transition matrix.
    Fc,
    Mae,
    Lq,
    Coteaching,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Ilfc => "ilfc",
            Method::Fc => "fc",
            Method::Mae => "mae",
            Method::Lq => "lq",
            Method::Coteaching => "coteaching",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "ilfc" => Ok(Method::Ilfc),
            "fc" => Ok(Method::Fc),
            "mae" => Ok(Method::Mae),
            "lq" => Ok(Method::Lq),
            "coteaching" => Ok(Method::Coteaching),
            other => Err(Error::Config(format!(
                "unknown method {other:?}; expected naive|ilfc|fc|mae|lq|coteaching"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    /// Lq exponent.
    pub q: f64,
    /// Co-teaching forget rate; measured from the data when absent.
    pub forget_rate: Option<f64>,
    /// Co-teaching ramp length in epochs.
    pub forget_ramp_epochs: usize,
    /// Anchors per class for transition estimation.
    pub anchors_per_class: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Ilfc,
            epochs: 60,
            batch_size: 64,
            learning_rate: 0.05,
            momentum: 0.9,
            hidden: vec![32, 32],
            q: 0.7,
            forget_rate: None,
            forget_ramp_epochs: 10,
            anchors_per_class: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::Config(format!("q = {} must lie in (0, 1]", self.q)));
        }
        if let Some(tau) = self.forget_rate {
            if !(0.0..=1.0).contains(&tau) {
                return Err(Error::Config(format!(
                    "forget_rate = {tau} must lie in [0, 1]"
                )));
            }
        }
        if self.forget_ramp_epochs == 0 {
            return Err(Error::Config("forget_ramp_epochs must be at least 1".into()));
        }
        if self.anchors_per_class == 0 {
            return Err(Error::Config("anchors_per_class must be at least 1".into()));
        }
        if self.hidden.is_empty() {
            return Err(Error::Config("at least one hidden layer is required".into()));
        }
        OptimizerState::new(self.learning_rate, self.momentum).map(|_| ())
    }

    pub fn layer_dims(&self, input_dim: usize, num_classes: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&self.hidden);
        dims.push(num_classes);
        dims
    }
}

/// Per-run record: one accuracy/loss triple per epoch plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: String,
    pub seed: u64,
    /// Hash of the effective configuration; filled in by the persistence
    /// layer.
    #[serde(default)]
    pub config_hash: String,
    pub train_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub test_acc: Vec<f64>,
    pub wall_time_s: f64,
    /// Empirical flip rate of the training labels, when ground truth exists.
    pub measured_noise_rate: Option<f64>,
    /// Path of the saved model snapshot, when one was written.
    pub model_path: Option<String>,
}

impl RunResult {
    pub fn final_test_acc(&self) -> f64 {
        *self.test_acc.last().expect("at least one epoch")
    }

    /// Mean test accuracy over the final `n` epochs (all epochs if fewer).
    pub fn last_n_mean_test_acc(&self, n: usize) -> f64 {
        let tail = &self.test_acc[self.test_acc.len().saturating_sub(n)..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn epochs(&self) -> usize {
        self.test_acc.len()
    }
}

/// Shuffled minibatch index lists for one epoch.
pub(crate) fn shuffled_batches(
    n: usize,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

pub(crate) fn gather_rows(features: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    features.select(Axis(0), idx)
}

/// Fraction of rows whose argmax prediction matches `labels`.
pub fn accuracy(model: &MLPModel, features: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    let preds = model.predict(features)?;
    let hits = preds.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len().max(1) as f64)
}

/// Per-sample cross-entropy against the observed labels.
pub(crate) fn per_sample_ce(
    model: &MLPModel,
    features: &Array2<f64>,
    labels: &[usize],
) -> Result<Vec<f64>> {
    let probs = model.forward(features)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probs[(i, y)].clamp(PROB_FLOOR, 1.0).ln())
        .collect())
}

pub(crate) struct FitOutput {
    pub model: MLPModel,
    pub result: RunResult,
    /// Probabilities on the training set averaged over the last third of the
    /// epochs; requested by the transition-estimation consumers, which want a
    /// smoother posterior estimate than the final SGD iterate.
    pub averaged_train_probs: Option<Array2<f64>>,
}

/// Core single-model loop shared by the naive, MAE, and Lq trainers.
pub(crate) fn fit_with_loss(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    kind: LossKind,
    seed: u64,
    average_tail: bool,
) -> Result<FitOutput> {
    cfg.validate()?;
    kind.validate()?;
    train.validate()?;
    let start = Instant::now();
    let k = train.num_classes;
    let mut model = MLPModel::new(&cfg.layer_dims(train.dim(), k), seed)?;
    let mut opt = OptimizerState::new(cfg.learning_rate, cfg.momentum)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));

    let n = train.len();
    let tail_start = cfg.epochs - (cfg.epochs / 3).max(1).min(cfg.epochs);
    let mut avg = average_tail.then(|| (Array2::<f64>::zeros((n, k)), 0usize));
    let mut result = RunResult {
        method: String::new(),
        seed: cfg.seed,
        config_hash: String::new(),
        train_loss: Vec::with_capacity(cfg.epochs),
        train_acc: Vec::with_capacity(cfg.epochs),
        test_acc: Vec::with_capacity(cfg.epochs),
        wall_time_s: 0.0,
        measured_noise_rate: train.measured_noise_rate(),
        model_path: None,
    };

    for epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        for batch in shuffled_batches(n, cfg.batch_size, &mut shuffle_rng) {
            let xb = gather_rows(&train.features, &batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train.noisy_labels[i]).collect();
            let loss = backward_and_step(&mut model, &xb, &yb, kind, None, &mut opt)?;
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
        if let Some((sum, count)) = avg.as_mut() {
            if epoch >= tail_start {
                *sum += &model.forward(&train.features)?;
                *count += 1;
            }
        }
    }

    result.wall_time_s = start.elapsed().as_secs_f64();
    let averaged_train_probs = avg.map(|(sum, count)| sum / count.max(1) as f64);
    Ok(FitOutput {
        model,
        result,
        averaged_train_probs,
    })
}

/// Forget rate for co-teaching and the small-loss probe: the configured value
/// or, failing that, the measured flip rate, the confidence-implied rate, or
/// 0.2 with a warning.
pub(crate) fn resolve_forget_rate(cfg: &TrainConfig, train: &Dataset) -> f64 {
    if let Some(tau) = cfg.forget_rate {
        return tau;
    }
    if let Some(rate) = train.measured_noise_rate() {
        return rate;
    }
    if let Some(conf) = &train.confidence {
        let est = 1.0 - conf.iter().sum::<f64>() / conf.len().max(1) as f64;
        return est.clamp(0.0, 1.0);
    }
    log::warn!("no forget rate configured and none measurable; defaulting to 0.2");
    0.2
}

/// Train with the configured method and return the reported model.
///
/// Method-specific extras (ILFC diagnostics, the fixed FC matrix, the
/// co-teaching peer) are dropped here; call the specific trainer to keep them.
pub fn run_method(train: &Dataset, test: &Dataset, cfg: &TrainConfig) -> Result<(MLPModel, RunResult)> {
    match cfg.method {
        Method::Naive => train_naive(train, test, cfg),
        Method::Mae | Method::Lq => train_baseline_loss(train, test, cfg),
        Method::Ilfc => {
            let out = train_ilfc(train, test, cfg, None)?;
            Ok((out.model, out.result))
        }
        Method::Fc => {
            let out = train_fc(train, test, cfg, None)?;
            Ok((out.model, out.result))
        }
        Method::Coteaching => {
            let out = train_coteaching(train, test, cfg)?;
            Ok((out.model, out.result))
        }
    }
}
