//! Command-line front end. Thin: parses arguments, loads the config, and
//! dispatches to the library.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use csidn::config::{config_reference, load_config, AppConfig};
use csidn::data::{corrupt, pseudo_label_pipeline, read_csv, write_csv, Dataset};
use csidn::error::Error;
use csidn::harness::{
    boundary_grid, run_sweep, sensitivity_sweep, small_loss_probe, write_grid,
};
use csidn::nn::MLPModel;
use csidn::runio::persist_run;
use csidn::train::{run_method, train_ilfc, Method, TrainConfig};
use csidn::util::derive_seed;

/// Environment variable naming the default output root (default `runs`).
const OUT_ROOT_ENV: &str = "CSIDN_OUT_ROOT";

#[derive(Parser)]
#[command(
    name = "csidn",
    version,
    about = "Label-noise experiments with confidence-scored instance-dependent noise",
    after_long_help = config_reference()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file (TOML); see --help for the full key reference
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. --set noise.rho=0.45 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: $CSIDN_OUT_ROOT/<subcommand> or runs/<subcommand>)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Override train.seed and noise.seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the clean concentric-circles dataset (train.csv, test.csv)
    Generate(CommonArgs),
    /// Corrupt a clean dataset according to [noise] (noisy.csv)
    Corrupt {
        #[command(flatten)]
        common: CommonArgs,
        /// Clean input CSV; generated from [dataset] when omitted
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Pseudo-label a pool with a calibrated classifier (pseudo.csv)
    PseudoLabel(CommonArgs),
    /// Train the configured method once (run.json, model.json)
    Train(CommonArgs),
    /// Multi-seed noise-rate sweep (cells/, curves.csv)
    Sweep(CommonArgs),
    /// Confidence-perturbation sensitivity analysis (cells/, sensitivity.csv)
    Sensitivity(CommonArgs),
    /// Small-loss selection probe (probe.csv, probe_summary.json)
    Probe(CommonArgs),
    /// Decision-boundary grid of a trained model (grid.csv)
    Grid {
        #[command(flatten)]
        common: CommonArgs,
        /// Existing model checkpoint; trains per [train] when omitted
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Generate(c)
            | Command::PseudoLabel(c)
            | Command::Train(c)
            | Command::Sweep(c)
            | Command::Sensitivity(c)
            | Command::Probe(c) => c,
            Command::Corrupt { common, .. } | Command::Grid { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Corrupt { .. } => "corrupt",
            Command::PseudoLabel(_) => "pseudo-label",
            Command::Train(_) => "train",
            Command::Sweep(_) => "sweep",
            Command::Sensitivity(_) => "sensitivity",
            Command::Probe(_) => "probe",
            Command::Grid { .. } => "grid",
        }
    }
}

fn is_usage_error(err: &Error) -> bool {
    matches!(
        err,
        Error::Config(_) | Error::Schema(_) | Error::Parse { .. }
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if is_usage_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn parse_overrides(common: &CommonArgs) -> Result<Vec<(String, String)>, Error> {
    let mut pairs = Vec::new();
    for raw in &common.overrides {
        let (key, value) = raw.split_once('=').ok_or_else(|| {
            Error::Config(format!("override {raw:?} must have the form key=value"))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    if let Some(seed) = common.seed {
        pairs.push(("train.seed".into(), seed.to_string()));
        pairs.push(("noise.seed".into(), seed.to_string()));
    }
    Ok(pairs)
}

fn out_dir(common: &CommonArgs, subcommand: &str) -> Result<PathBuf, Error> {
    let dir = match &common.out {
        Some(dir) => dir.clone(),
        None => std::env::var_os(OUT_ROOT_ENV)
            .map_or_else(|| PathBuf::from("runs"), PathBuf::from)
            .join(subcommand),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load(common: &CommonArgs) -> Result<AppConfig, Error> {
    let overrides = parse_overrides(common)?;
    load_config(&common.config, &overrides)
}

/// Generate the configured train/test splits (clean).
fn splits(config: &AppConfig) -> Result<(Dataset, Dataset), Error> {
    let circles = config.circles_spec()?;
    let train = circles.generate()?;
    let test = circles
        .with_samples(
            config.dataset.test_per_class,
            derive_seed(circles.seed, 0x7465),
        )
        .generate()?;
    Ok((train, test))
}

fn corrupted_splits(config: &AppConfig) -> Result<(Dataset, Dataset), Error> {
    let circles = config.circles_spec()?;
    let noise = config.noise_spec()?;
    let (train, test) = splits(config)?;
    Ok((corrupt(&train, &noise, Some(&circles))?, test))
}

fn run(command: &Command) -> Result<(), Error> {
    let common = command.common();
    let config = load(common)?;
    let dir = out_dir(common, command.name())?;

    match command {
        Command::Generate(_) => {
            let (train, test) = splits(&config)?;
            write_csv(&train, &dir.join("train.csv"))?;
            write_csv(&test, &dir.join("test.csv"))?;
            println!(
                "generated {} train / {} test points over {} classes -> {}",
                train.len(),
                test.len(),
                train.num_classes,
                dir.display()
            );
        }
        Command::Corrupt { input, .. } => {
            let circles = config.circles_spec()?;
            let noise = config.noise_spec()?;
            let clean = match input {
                Some(path) => read_csv(path)?,
                None => circles.generate()?,
            };
            let noisy = corrupt(&clean, &noise, Some(&circles))?;
            write_csv(&noisy, &dir.join("noisy.csv"))?;
            let rate = noisy
                .measured_noise_rate()
                .map_or("n/a".to_string(), |r| format!("{r:.4}"));
            println!(
                "corrupted {} points (measured flip rate {rate}) -> {}",
                noisy.len(),
                dir.join("noisy.csv").display()
            );
        }
        Command::PseudoLabel(_) => {
            let circles = config.circles_spec()?;
            let p = &config.pseudo;
            let clean = circles
                .with_samples(p.clean_per_class, derive_seed(circles.seed, 0x70_01))
                .generate()?;
            let valid = circles
                .with_samples(p.valid_per_class, derive_seed(circles.seed, 0x70_02))
                .generate()?;
            let pool = circles
                .with_samples(p.pool_per_class, derive_seed(circles.seed, 0x70_03))
                .generate()?;
            let cfg = config.train_config()?;
            let out =
                pseudo_label_pipeline(&clean, &valid, &pool, &cfg, p.force_unit_temperature)?;
            write_csv(&out.dataset, &dir.join("pseudo.csv"))?;
            std::fs::write(
                dir.join("pseudo_report.json"),
                serde_json::to_string_pretty(&out.report)?,
            )?;
            println!(
                "pseudo-labeled {} points: t = {:.3}, ECE {:.4} (t=1: {:.4}), noise rate {}",
                out.dataset.len(),
                out.report.temperature,
                out.report.ece_calibrated,
                out.report.ece_uncalibrated,
                out.report
                    .empirical_noise_rate
                    .map_or("n/a".into(), |r| format!("{r:.4}")),
            );
        }
        Command::Train(_) => {
            let cfg = config.train_config()?;
            let (train, test) = corrupted_splits(&config)?;
            let (model, mut result) = train_once(&train, &test, &cfg, &dir)?;
            let model_path = dir.join("model.json");
            model.save(&model_path)?;
            result.model_path = Some(model_path.display().to_string());
            let config_value = serde_json::to_value(&config)?;
            persist_run(&result, &config_value, &dir.join("run.json"))?;
            println!(
                "{}: final test accuracy {:.4} (last-10 mean {:.4}) -> {}",
                cfg.method,
                result.final_test_acc(),
                result.last_n_mean_test_acc(10),
                dir.display()
            );
        }
        Command::Sweep(_) => {
            let plan = config.sweep_plan()?;
            let report = run_sweep(&plan, &dir)?;
            println!(
                "sweep: {} cells ok, {} failed -> {}",
                report.cell_results.len(),
                report.failures.len(),
                report.curves_path.display()
            );
            for failure in &report.failures {
                eprintln!(
                    "  failed cell ({}, {}, {}): {}",
                    failure.method, failure.rate, failure.seed, failure.error
                );
            }
        }
        Command::Sensitivity(_) => {
            let plan = config.sensitivity_plan()?;
            let report = sensitivity_sweep(&plan, &dir)?;
            println!("sensitivity -> {}", report.csv_path.display());
            for row in &report.rows {
                println!(
                    "  sigma {:.2}: final {:.4} (delta vs sigma=0: {:+.4})",
                    row.sigma, row.final_mean, row.delta_final_vs_sigma0
                );
            }
        }
        Command::Probe(_) => {
            if matches!(config.noise.kind, csidn::config::NoiseKindName::Ccn) {
                return Err(Error::Config(
                    "probe needs a directional noise kind (clean, idn, or csidn)".into(),
                ));
            }
            let (train, _) = corrupted_splits(&config)?;
            let mut cfg = config.train_config()?;
            cfg.epochs = config.experiment.probe_epochs;
            let w = config.noise.w.clone();
            let report = small_loss_probe(&train, &w, &cfg, &dir)?;
            println!(
                "probe: selected {} of {} points; mean cos {:.4} vs population {:.4} (bias {:.4})",
                report.summary.selected_size,
                train.len(),
                report.summary.selected_mean_cos,
                report.summary.population_mean_cos,
                report.summary.selection_bias
            );
        }
        Command::Grid { model, .. } => {
            let model = match model {
                Some(path) => MLPModel::load(path)?,
                None => {
                    let cfg = config.train_config()?;
                    let (train, test) = corrupted_splits(&config)?;
                    train_once(&train, &test, &cfg, &dir)?.0
                }
            };
            let [lo, hi] = config.experiment.grid_bounds;
            let rows = boundary_grid(&model, (lo, hi), config.experiment.grid_resolution)?;
            write_grid(&rows, &dir.join("grid.csv"))?;
            println!(
                "grid: {} rows -> {}",
                rows.len(),
                dir.join("grid.csv").display()
            );
        }
    }
    Ok(())
}

/// Train the configured method; ILFC also dumps its estimation diagnostics.
fn train_once(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    dir: &Path,
) -> Result<(MLPModel, csidn::train::RunResult), Error> {
    if cfg.method == Method::Ilfc {
        let out = train_ilfc(train, test, cfg, None)?;
        std::fs::write(
            dir.join("ilfc_diagnostics.json"),
            serde_json::to_string_pretty(&out.diagnostics)?,
        )?;
        Ok((out.model, out.result))
    } else {
        run_method(train, test, cfg)
    }
}
