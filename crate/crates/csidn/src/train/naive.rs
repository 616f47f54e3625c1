//! Naive cross-entropy training and the robust-loss baselines.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::loss::LossKind;
use crate::nn::MLPModel;
use crate::train::{fit_with_loss, FitOutput, Method, RunResult, TrainConfig};
use crate::util::derive_seed;

/// Plain cross-entropy on the observed labels. The returned model estimates
/// the noisy posterior and is frozen by the callers that reuse it.
pub fn train_naive(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<(MLPModel, RunResult)> {
    let out = fit_with_loss(train, test, cfg, LossKind::CrossEntropy, cfg.seed, false)?;
    let mut result = out.result;
    result.method = Method::Naive.name().into();
    Ok((out.model, result))
}

/// A frozen noisy-posterior reference: the naive classifier plus its
/// training-set probabilities averaged over the last third of the epochs
/// (a steadier estimate than the final SGD iterate).
#[derive(Debug)]
pub struct NoisyReference {
    pub model: MLPModel,
    pub result: RunResult,
    /// `n x k` averaged probabilities on the training set.
    pub train_probs: ndarray::Array2<f64>,
}

/// Train the naive classifier and freeze its averaged posterior estimates,
/// for consumers that estimate transition quantities from them.
pub fn train_noisy_reference(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<NoisyReference> {
    // Distinct stream from the main model so the two nets are independent.
    let seed = derive_seed(cfg.seed, 0x6e6f_6973);
    let out: FitOutput = fit_with_loss(train, test, cfg, LossKind::CrossEntropy, seed, true)?;
    let mut result = out.result;
    result.method = Method::Naive.name().into();
    Ok(NoisyReference {
        model: out.model,
        result,
        train_probs: out
            .averaged_train_probs
            .expect("tail averaging requested"),
    })
}

/// MAE or Lq training, with no transition estimation.
pub fn train_baseline_loss(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<(MLPModel, RunResult)> {
    let kind = match cfg.method {
        Method::Mae => LossKind::Mae,
        Method::Lq => LossKind::Lq { q: cfg.q },
        other => {
            return Err(Error::Config(format!(
                "train_baseline_loss handles mae|lq, not {other}"
            )))
        }
    };
    let out = fit_with_loss(train, test, cfg, kind, cfg.seed, false)?;
    let mut result = out.result;
    result.method = cfg.method.name().into();
    Ok((out.model, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{corrupt, CirclesSpec, ConfidenceMode, NoiseSpec};

    #[test]
    fn clean_circles_train_well() {
        let gen = CirclesSpec {
            per_class: 300,
            seed: 42,
            ..CirclesSpec::default()
        };
        let train = gen.generate().unwrap();
        let test = gen.with_samples(150, 43).generate().unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        };
        let (_, result) = train_naive(&train, &test, &cfg).unwrap();
        assert!(
            result.final_test_acc() >= 0.98,
            "clean accuracy {}",
            result.final_test_acc()
        );
    }

    #[test]
    fn zero_rate_csidn_matches_clean_run_bit_for_bit() {
        let gen = CirclesSpec {
            per_class: 80,
            seed: 1,
            ..CirclesSpec::default()
        };
        let clean = gen.generate().unwrap();
        let spec = NoiseSpec::csidn(vec![0.0, 1.0], 0.0, ConfidenceMode::ExactPosterior, 5);
        let zero_noise = corrupt(&clean, &spec, Some(&gen)).unwrap();
        let test = gen.with_samples(50, 2).generate().unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let (_, a) = train_naive(&clean, &test, &cfg).unwrap();
        let (_, b) = train_naive(&zero_noise, &test, &cfg).unwrap();
        assert_eq!(a.train_loss, b.train_loss);
        assert_eq!(a.test_acc, b.test_acc);
    }

    #[test]
    fn noise_degrades_naive_accuracy() {
        let gen = CirclesSpec {
            per_class: 300,
            seed: 42,
            ..CirclesSpec::default()
        };
        let clean = gen.generate().unwrap();
        let test = gen.with_samples(150, 43).generate().unwrap();
        let spec = NoiseSpec::csidn(vec![0.0, 1.0], 1.0, ConfidenceMode::ExactPosterior, 5);
        let noisy = corrupt(&clean, &spec, Some(&gen)).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        };
        let (_, clean_run) = train_naive(&clean, &test, &cfg).unwrap();
        let (_, noisy_run) = train_naive(&noisy, &test, &cfg).unwrap();
        assert!(noisy_run.final_test_acc() < clean_run.final_test_acc());
    }

    #[test]
    fn baseline_loss_rejects_other_methods() {
        let gen = CirclesSpec {
            per_class: 10,
            ..CirclesSpec::default()
        };
        let ds = gen.generate().unwrap();
        let cfg = TrainConfig {
            method: Method::Naive,
            ..TrainConfig::default()
        };
        assert!(train_baseline_loss(&ds, &ds, &cfg).is_err());
    }
}
