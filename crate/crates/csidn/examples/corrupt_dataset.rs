//! Apply directional instance-dependent corruption with exact confidence
//! scores, and verify that the scores are calibrated: within a confidence
//! band, the fraction of labels that are actually correct matches the band.
//!
//! ```text
//! cargo run --release -p csidn --example corrupt_dataset
//! ```

use csidn::data::{corrupt, write_csv, CirclesSpec, ConfidenceMode, NoiseSpec};

fn main() -> csidn::Result<()> {
    let gen = CirclesSpec {
        per_class: 2000,
        seed: 42,
        ..CirclesSpec::default()
    };
    let clean = gen.generate()?;

    for rho in [0.5, 1.0] {
        let spec = NoiseSpec::csidn(vec![0.0, 1.0], rho, ConfidenceMode::ExactPosterior, 7);
        let noisy = corrupt(&clean, &spec, Some(&gen))?;
        println!(
            "rho = {rho}: measured flip rate {:.4} (angular mean of the law is rho/2 = {})",
            noisy.measured_noise_rate().unwrap(),
            rho / 2.0
        );

        // Calibration check: group samples by confidence band and compare the
        // band center against the empirical accuracy of the noisy labels.
        let conf = noisy.confidence.as_deref().unwrap();
        let clean_labels = noisy.clean_labels.as_deref().unwrap();
        println!("  band        n     empirical accuracy");
        for band in 0..5 {
            let (lo, hi) = (band as f64 * 0.2, band as f64 * 0.2 + 0.2);
            let idx: Vec<usize> = (0..noisy.len())
                .filter(|&i| conf[i] >= lo && (conf[i] < hi || (band == 4 && conf[i] <= hi)))
                .collect();
            if idx.len() < 50 {
                continue;
            }
            let acc = idx
                .iter()
                .filter(|&&i| noisy.noisy_labels[i] == clean_labels[i])
                .count() as f64
                / idx.len() as f64;
            println!("  [{lo:.1}, {hi:.1})  {:5}  {acc:.3}", idx.len());
        }

        if rho == 1.0 {
            let out = std::path::Path::new("runs/examples/csidn_rho1.csv");
            std::fs::create_dir_all(out.parent().unwrap())?;
            write_csv(&noisy, out)?;
            println!("  wrote {}", out.display());
        }
    }
    Ok(())
}
