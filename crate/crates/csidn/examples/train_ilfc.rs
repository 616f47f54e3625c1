//! Train with instance-level forward correction on a heavily corrupted
//! dataset and inspect the estimation diagnostics.
//!
//! ```text
//! cargo run --release -p csidn --example train_ilfc
//! ```

use csidn::data::{corrupt, CirclesSpec, ConfidenceMode, NoiseSpec};
use csidn::train::{train_ilfc, TrainConfig};
use csidn::util::derive_seed;

fn main() -> csidn::Result<()> {
    let gen = CirclesSpec {
        per_class: 500,
        seed: 42,
        ..CirclesSpec::default()
    };
    let train = gen.generate()?;
    let test = gen.with_samples(300, derive_seed(42, 0x7465)).generate()?;

    // Flip-law parameter 1.0: points toward (0, 1) are almost surely
    // mislabeled, the mean rate is ~0.5.
    let spec = NoiseSpec::csidn(vec![0.0, 1.0], 1.0, ConfidenceMode::ExactPosterior, 9);
    let noisy = corrupt(&train, &spec, Some(&gen))?;
    println!(
        "training on {} points, measured flip rate {:.3}",
        noisy.len(),
        noisy.measured_noise_rate().unwrap()
    );

    let cfg = TrainConfig {
        epochs: 40,
        seed: 1,
        ..TrainConfig::default()
    };
    let out = train_ilfc(&noisy, &test, &cfg, None)?;

    println!("\nepoch  corrected-loss  test-acc");
    for (i, (&loss, &acc)) in out
        .result
        .train_loss
        .iter()
        .zip(&out.result.test_acc)
        .enumerate()
    {
        if (i + 1) % 5 == 0 {
            println!("{:>5}  {loss:>14.4}  {acc:>8.4}", i + 1);
        }
    }

    let d = &out.diagnostics;
    println!("\nestimated class-transition constants (rows sum to 1 off-diagonal):");
    for row in &d.alpha_normalized {
        println!(
            "  [{}]",
            row.iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    println!(
        "mu (class-mean diagonals), first epoch {:?} -> last epoch {:?}",
        d.mu_per_epoch
            .first()
            .map(|m| m.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()),
        d.mu_per_epoch
            .last()
            .map(|m| m.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()),
    );
    println!(
        "final test accuracy {:.4} (wall time {:.1}s)",
        out.result.final_test_acc(),
        out.result.wall_time_s
    );
    Ok(())
}
