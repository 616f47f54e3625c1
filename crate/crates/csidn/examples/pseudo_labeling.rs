//! Emulate building a weakly labeled dataset: train on a small curated
//! subset, calibrate the softmax temperature on a validation split, then
//! pseudo-label a large pool and keep the max probability as the confidence
//! score.
//!
//! ```text
//! cargo run --release -p csidn --example pseudo_labeling
//! ```

use csidn::data::{pseudo_label_pipeline, write_csv, CirclesSpec};
use csidn::train::TrainConfig;
use csidn::util::derive_seed;

fn main() -> csidn::Result<()> {
    let gen = CirclesSpec {
        seed: 42,
        ..CirclesSpec::default()
    };
    let clean = gen.with_samples(150, derive_seed(42, 1)).generate()?;
    let valid = gen.with_samples(150, derive_seed(42, 2)).generate()?;
    let pool = gen.with_samples(800, derive_seed(42, 3)).generate()?;

    let cfg = TrainConfig {
        epochs: 40,
        seed: 9,
        ..TrainConfig::default()
    };
    let out = pseudo_label_pipeline(&clean, &valid, &pool, &cfg, false)?;
    let r = &out.report;
    println!(
        "selected temperature {:.3}: ECE {:.4} (uncalibrated {:.4})",
        r.temperature, r.ece_calibrated, r.ece_uncalibrated
    );
    println!(
        "pseudo-labeled {} pool points; empirical noise rate {:.4}, mean confidence {:.4}",
        out.dataset.len(),
        r.empirical_noise_rate.unwrap(),
        r.mean_confidence
    );

    let path = std::path::Path::new("runs/examples/pseudo.csv");
    std::fs::create_dir_all(path.parent().unwrap())?;
    write_csv(&out.dataset, path)?;
    println!("wrote {} (ready for the CSIDN trainers)", path.display());
    Ok(())
}
