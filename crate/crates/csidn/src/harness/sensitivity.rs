//! Robustness of instance-level forward correction to inaccurate confidence
//! scores: zero-mean Gaussian perturbation, clipped back to [0, 1].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde_json::json;
use std::path::{Path, PathBuf};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::harness::stats::t_interval;
use crate::harness::sweep::{corrupt_for_cell, SweepPlan, CONFIDENCE_LEVEL};
use crate::runio::persist_run;
use crate::train::{train_ilfc, Method, RunResult, TrainConfig};
use crate::util::{derive_seed, fmt_sig};

#[derive(Debug, Clone)]
pub struct SensitivityPlan {
    pub base: SweepPlan,
    /// Target mean noise rate of the corrupted dataset.
    pub rate: f64,
    /// Perturbation standard deviations (0 means untouched scores).
    pub sigma_grid: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SensitivityRow {
    pub sigma: f64,
    pub final_mean: f64,
    pub final_ci_lo: f64,
    pub final_ci_hi: f64,
    pub last10_mean: f64,
    pub delta_final_vs_sigma0: f64,
}

#[derive(Debug)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
    pub cell_results: Vec<(f64, RunResult)>,
    pub csv_path: PathBuf,
}

/// Add seeded zero-mean Gaussian noise to every confidence score and clip to
/// [0, 1]. `sigma == 0` returns the scores bit-unchanged.
pub fn perturb_confidences(confidence: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    if sigma == 0.0 {
        return confidence.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    confidence
        .iter()
        .enumerate()
        .map(|(idx, &r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            (r + normal.sample(&mut rng)).clamp(0.0, 1.0)
        })
        .collect()
}

/// Re-run ILFC per `(sigma, seed)` cell and report accuracy deltas against
/// the unperturbed scores.
pub fn sensitivity_sweep(plan: &SensitivityPlan, out_dir: &Path) -> Result<SensitivityReport> {
    plan.base.validate()?;
    if plan.sigma_grid.is_empty() {
        return Err(Error::Config("sensitivity needs at least one sigma".into()));
    }
    if let Some(&bad) = plan.sigma_grid.iter().find(|&&s| s < 0.0) {
        return Err(Error::Config(format!("sigma {bad} must be non-negative")));
    }
    std::fs::create_dir_all(out_dir.join("cells"))?;
    let (clean_train, test) = plan.base.generate_splits()?;

    let mut cells: Vec<(f64, u64)> = Vec::new();
    for &sigma in &plan.sigma_grid {
        for &seed in &plan.base.seeds {
            cells.push((sigma, seed));
        }
    }

    let outcomes: Vec<(f64, u64, Result<RunResult>)> = cells
        .par_iter()
        .map(|&(sigma, seed)| {
            let outcome = (|| -> Result<RunResult> {
                let noisy = corrupt_for_cell(&plan.base, &clean_train, plan.rate, seed)?;
                let perturbed = perturb_confidences(
                    noisy.confidence.as_deref().expect("csidn corruption"),
                    sigma,
                    derive_seed(seed, 0x7369_676d),
                );
                let data = Dataset {
                    confidence: Some(perturbed),
                    ..noisy
                };
                let cfg = TrainConfig {
                    method: Method::Ilfc,
                    seed,
                    ..plan.base.train.clone()
                };
                let out = train_ilfc(&data, &test, &cfg, None)?;
                let config = json!({
                    "method": "ilfc",
                    "rate": plan.rate,
                    "sigma": sigma,
                    "seed": seed,
                    "dataset": &plan.base.dataset,
                    "train": &cfg,
                });
                persist_run(
                    &out.result,
                    &config,
                    &out_dir
                        .join("cells")
                        .join(format!("sens_{sigma}_{seed}.json")),
                )?;
                Ok(out.result)
            })();
            (sigma, seed, outcome)
        })
        .collect();

    let mut cell_results = Vec::new();
    for (sigma, seed, outcome) in outcomes {
        match outcome {
            Ok(result) => cell_results.push((sigma, result)),
            Err(err) => log::error!("sensitivity cell (sigma={sigma}, seed={seed}) failed: {err}"),
        }
    }

    let mut rows = Vec::new();
    let mut sigma0_final = None;
    let mut sigmas = plan.sigma_grid.clone();
    sigmas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    sigmas.dedup();
    for sigma in sigmas {
        let finals: Vec<f64> = cell_results
            .iter()
            .filter(|(s, _)| *s == sigma)
            .map(|(_, r)| r.final_test_acc())
            .collect();
        if finals.is_empty() {
            continue;
        }
        let last10: Vec<f64> = cell_results
            .iter()
            .filter(|(s, _)| *s == sigma)
            .map(|(_, r)| r.last_n_mean_test_acc(10))
            .collect();
        let (final_mean, lo, hi) = t_interval(&finals, CONFIDENCE_LEVEL);
        let last10_mean = last10.iter().sum::<f64>() / last10.len() as f64;
        if sigma == 0.0 {
            sigma0_final = Some(final_mean);
        }
        rows.push(SensitivityRow {
            sigma,
            final_mean,
            final_ci_lo: lo,
            final_ci_hi: hi,
            last10_mean,
            delta_final_vs_sigma0: sigma0_final.map_or(f64::NAN, |base| final_mean - base),
        });
    }

    let csv_path = out_dir.join("sensitivity.csv");
    let mut writer = csv::Writer::from_path(&csv_path)?;
    writer.write_record([
        "sigma",
        "final_mean",
        "final_ci_lo",
        "final_ci_hi",
        "last10_mean",
        "delta_final_vs_sigma0",
    ])?;
    for row in &rows {
        writer.write_record([
            format!("{}", row.sigma),
            fmt_sig(row.final_mean, 6),
            fmt_sig(row.final_ci_lo, 6),
            fmt_sig(row.final_ci_hi, 6),
            fmt_sig(row.last10_mean, 6),
            fmt_sig(row.delta_final_vs_sigma0, 6),
        ])?;
    }
    writer.flush()?;
    Ok(SensitivityReport {
        rows,
        cell_results,
        csv_path,
    })
}
