//! Why small-loss sample selection breaks under instance-dependent noise:
//! after a few epochs the selected "clean" set concentrates opposite the
//! noise direction, shifting the training distribution.
//!
//! ```text
//! cargo run --release -p csidn --example small_loss_probe
//! ```

use csidn::data::{corrupt, CirclesSpec, ConfidenceMode, NoiseSpec};
use csidn::harness::small_loss_probe;
use csidn::train::TrainConfig;

fn main() -> csidn::Result<()> {
    let gen = CirclesSpec {
        per_class: 1000,
        seed: 42,
        ..CirclesSpec::default()
    };
    let clean = gen.generate()?;
    // p(x) = (cos(w, x) + 1) / 2: certain corruption toward (0, 1).
    let spec = NoiseSpec::csidn(vec![0.0, 1.0], 1.0, ConfidenceMode::ExactPosterior, 3);
    let noisy = corrupt(&clean, &spec, Some(&gen))?;

    let cfg = TrainConfig {
        epochs: 10,
        seed: 5,
        ..TrainConfig::default()
    };
    let report = small_loss_probe(
        &noisy,
        &[0.0, 1.0],
        &cfg,
        std::path::Path::new("runs/examples/probe"),
    )?;
    let s = &report.summary;
    println!("top-50% small-loss set after {} epochs:", s.epochs);
    println!("  selected {} points", s.selected_size);
    println!(
        "  mean cosine toward w: population {:+.4}, selected {:+.4} (bias {:.4})",
        s.population_mean_cos, s.selected_mean_cos, s.selection_bias
    );
    println!(
        "  fraction in the noisy half-plane: population {:.3}, selected {:.3}",
        s.population_frac_toward_w, s.selected_frac_toward_w
    );
    println!(
        "per-point dump: {} (plot cos_w vs selected to see the shift)",
        report.csv_path.display()
    );
    Ok(())
}
