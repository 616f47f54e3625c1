//! Multi-seed noise-rate sweeps.
//!
//! Cells are labeled by target mean noise rate. The directional flip law
//! `rho * (cos + 1) / 2` averages to `rho / 2` over angularly uniform data,
//! so a cell at mean rate `r` corrupts with law parameter `2 r` (capped at
//! 1). Every cell also records its measured empirical rate.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::data::{corrupt, CirclesSpec, ConfidenceMode, Dataset, NoiseSpec};
use crate::error::{Error, Result};
use crate::harness::stats::t_interval;
use crate::runio::{load_run, persist_run};
use crate::train::{run_method, Method, RunResult, TrainConfig};
use crate::util::{derive_seed, fmt_sig};

/// Confidence level for the seed-aggregated intervals.
pub const CONFIDENCE_LEVEL: f64 = 0.95;

const CURVE_DIGITS: usize = 6;

/// Flip-law parameter delivering a target mean noise rate on angularly
/// uniform data.
pub fn flip_param_for_rate(rate: f64) -> f64 {
    (2.0 * rate).min(1.0)
}

/// Everything a sweep needs, already validated by the config layer.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub dataset: CirclesSpec,
    pub test_per_class: usize,
    pub direction: Vec<f64>,
    pub confidence_mode: ConfidenceMode,
    pub methods: Vec<Method>,
    /// Target mean noise rates.
    pub noise_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("sweep needs at least one seed".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("sweep needs at least one method".into()));
        }
        if let Some(&bad) = self
            .noise_rates
            .iter()
            .find(|&&r| !(0.0..=1.0).contains(&r) || flip_param_for_rate(r) > 1.0)
        {
            return Err(Error::Config(format!(
                "noise rate {bad} out of range (mean rates up to 0.5 are representable)"
            )));
        }
        Ok(())
    }

    /// Shared clean train/test pair for every cell.
    pub fn generate_splits(&self) -> Result<(Dataset, Dataset)> {
        let train = self.dataset.generate()?;
        let test = self
            .dataset
            .with_samples(self.test_per_class, derive_seed(self.dataset.seed, 0x7465))
            .generate()?;
        Ok((train, test))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellFailure {
    pub method: String,
    pub rate: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveRow {
    /// 1-based epoch.
    pub epoch: usize,
    pub method: String,
    pub rho: f64,
    pub mean_acc: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug)]
pub struct SweepReport {
    pub cell_results: Vec<RunResult>,
    pub failures: Vec<CellFailure>,
    pub curves: Vec<CurveRow>,
    pub curves_path: PathBuf,
}

fn cell_file(out_dir: &Path, method: Method, rate: f64, seed: u64) -> PathBuf {
    out_dir
        .join("cells")
        .join(format!("{}_{}_{}.json", method.name(), rate, seed))
}

/// Corrupt the shared clean training set for one cell.
pub fn corrupt_for_cell(
    plan: &SweepPlan,
    clean_train: &Dataset,
    rate: f64,
    seed: u64,
) -> Result<Dataset> {
    let spec = NoiseSpec::csidn(
        plan.direction.clone(),
        flip_param_for_rate(rate),
        plan.confidence_mode,
        derive_seed(seed, 0x636f_7272),
    );
    corrupt(clean_train, &spec, Some(&plan.dataset))
}

/// Run every `(method, rate, seed)` cell, write per-cell JSON records, then
/// aggregate curves from the persisted files.
///
/// Cells run in parallel; failures are recorded and skipped by aggregation.
pub fn run_sweep(plan: &SweepPlan, out_dir: &Path) -> Result<SweepReport> {
    plan.validate()?;
    std::fs::create_dir_all(out_dir.join("cells"))?;
    let (clean_train, test) = plan.generate_splits()?;

    let mut cells: Vec<(Method, f64, u64)> = Vec::new();
    for &method in &plan.methods {
        for &rate in &plan.noise_rates {
            for &seed in &plan.seeds {
                cells.push((method, rate, seed));
            }
        }
    }

    let outcomes: Vec<(Method, f64, u64, Result<RunResult>)> = cells
        .par_iter()
        .map(|&(method, rate, seed)| {
            let outcome = (|| -> Result<RunResult> {
                let noisy = corrupt_for_cell(plan, &clean_train, rate, seed)?;
                let cfg = TrainConfig {
                    method,
                    seed,
                    ..plan.train.clone()
                };
                let (_, result) = run_method(&noisy, &test, &cfg)?;
                let config = json!({
                    "method": method.name(),
                    "rate": rate,
                    "seed": seed,
                    "dataset": &plan.dataset,
                    "direction": &plan.direction,
                    "flip_param": flip_param_for_rate(rate),
                    "train": &cfg,
                });
                persist_run(&result, &config, &cell_file(out_dir, method, rate, seed))?;
                Ok(result)
            })();
            (method, rate, seed, outcome)
        })
        .collect();

    let mut cell_results = Vec::new();
    let mut failures = Vec::new();
    for (method, rate, seed, outcome) in outcomes {
        match outcome {
            Ok(result) => cell_results.push(result),
            Err(err) => {
                log::error!("cell ({method}, {rate}, {seed}) failed: {err}");
                failures.push(CellFailure {
                    method: method.name().into(),
                    rate,
                    seed,
                    error: err.to_string(),
                });
            }
        }
    }

    let curves = aggregate_cells(&out_dir.join("cells"))?;
    let curves_path = out_dir.join("curves.csv");
    write_curves(&curves, &curves_path)?;
    Ok(SweepReport {
        cell_results,
        failures,
        curves,
        curves_path,
    })
}

/// Rebuild the aggregate curves purely from the persisted cell records.
pub fn aggregate_cells(cell_dir: &Path) -> Result<Vec<CurveRow>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(cell_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();

    // (method, rate) -> per-seed accuracy series
    let mut groups: BTreeMap<(String, String), Vec<Vec<f64>>> = BTreeMap::new();
    for path in paths {
        let record = load_run(&path)?;
        let rate = record
            .config
            .get("rate")
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Error::Schema(format!("{}: no rate in config", path.display())))?;
        groups
            .entry((record.result.method.clone(), format!("{rate}")))
            .or_default()
            .push(record.result.test_acc.clone());
    }

    let mut rows = Vec::new();
    for ((method, rate_key), series) in groups {
        let rho: f64 = rate_key.parse().expect("rate printed from f64");
        let epochs = series.iter().map(Vec::len).min().unwrap_or(0);
        for epoch in 0..epochs {
            let at_epoch: Vec<f64> = series.iter().map(|s| s[epoch]).collect();
            let (mean, lo, hi) = t_interval(&at_epoch, CONFIDENCE_LEVEL);
            rows.push(CurveRow {
                epoch: epoch + 1,
                method: method.clone(),
                rho,
                mean_acc: mean,
                ci_lo: lo,
                ci_hi: hi,
            });
        }
    }
    Ok(rows)
}

/// Write `curves.csv` (headers, floats at 6 significant digits).
pub fn write_curves(rows: &[CurveRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["epoch", "method", "rho", "mean_acc", "ci_lo", "ci_hi"])?;
    for row in rows {
        writer.write_record([
            row.epoch.to_string(),
            row.method.clone(),
            format!("{}", row.rho),
            fmt_sig(row.mean_acc, CURVE_DIGITS),
            fmt_sig(row.ci_lo, CURVE_DIGITS),
            fmt_sig(row.ci_hi, CURVE_DIGITS),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
