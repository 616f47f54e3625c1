//! A small multi-seed noise-rate sweep with Student-t confidence intervals.
//!
//! ```text
//! cargo run --release -p csidn --example noise_sweep
//! ```

use csidn::data::ConfidenceMode;
use csidn::harness::{run_sweep, SweepPlan};
use csidn::data::CirclesSpec;
use csidn::train::{Method, TrainConfig};

fn main() -> csidn::Result<()> {
    let plan = SweepPlan {
        dataset: CirclesSpec {
            per_class: 400,
            seed: 42,
            ..CirclesSpec::default()
        },
        test_per_class: 250,
        direction: vec![0.0, 1.0],
        confidence_mode: ConfidenceMode::ExactPosterior,
        methods: vec![Method::Ilfc, Method::Fc],
        noise_rates: vec![0.25, 0.5],
        seeds: vec![1, 2, 3],
        train: TrainConfig {
            epochs: 25,
            ..TrainConfig::default()
        },
    };
    let out_dir = std::path::Path::new("runs/examples/sweep");
    let report = run_sweep(&plan, out_dir)?;
    println!(
        "{} cells written under {}, aggregated to {}",
        report.cell_results.len(),
        out_dir.join("cells").display(),
        report.curves_path.display()
    );

    println!("\nfinal-epoch rows of curves.csv:");
    println!("method  rho   mean_acc  95% CI");
    for row in report
        .curves
        .iter()
        .filter(|r| r.epoch == plan.train.epochs)
    {
        println!(
            "{:<6}  {:<4}  {:.4}    [{:.4}, {:.4}]",
            row.method, row.rho, row.mean_acc, row.ci_lo, row.ci_hi
        );
    }
    Ok(())
}
