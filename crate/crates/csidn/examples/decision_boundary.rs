//! Decision boundaries under heavy directional noise: instance-level forward
//! correction against the Lq baseline, scored against the closed-form Bayes
//! regions of the clean distribution.
//!
//! ```text
//! cargo run --release -p csidn --example decision_boundary
//! ```

use csidn::data::{corrupt, CirclesSpec, ConfidenceMode, NoiseSpec};
use csidn::harness::{boundary_grid, write_grid};
use csidn::train::{run_method, Method, TrainConfig};
use csidn::util::derive_seed;

fn main() -> csidn::Result<()> {
    let gen = CirclesSpec {
        per_class: 500,
        seed: 42,
        ..CirclesSpec::default()
    };
    let train = gen.generate()?;
    let test = gen.with_samples(250, derive_seed(42, 0x7465)).generate()?;
    let spec = NoiseSpec::csidn(vec![0.0, 1.0], 1.0, ConfidenceMode::ExactPosterior, 9);
    let noisy = corrupt(&train, &spec, Some(&gen))?;
    let out_dir = std::path::Path::new("runs/examples/boundaries");
    std::fs::create_dir_all(out_dir)?;

    for method in [Method::Ilfc, Method::Lq] {
        let cfg = TrainConfig {
            method,
            epochs: 40,
            seed: 1,
            ..TrainConfig::default()
        };
        let (model, result) = run_method(&noisy, &test, &cfg)?;
        let rows = boundary_grid(&model, (-4.0, 4.0), 150)?;

        // Agreement with the clean Bayes regions, split by half-plane: the
        // upper half is where the noise concentrated.
        let (mut up_hit, mut up_n, mut low_hit, mut low_n) = (0usize, 0usize, 0usize, 0usize);
        for row in &rows {
            let post = gen.bayes_posterior(&[row.x0, row.x1]);
            let bayes = post
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            if row.x1 >= 0.0 {
                up_n += 1;
                up_hit += usize::from(row.argmax == bayes);
            } else {
                low_n += 1;
                low_hit += usize::from(row.argmax == bayes);
            }
        }
        let path = out_dir.join(format!("grid_{}.csv", method.name()));
        write_grid(&rows, &path)?;
        println!(
            "{:<5} final acc {:.4}; Bayes-region agreement: noisy half {:.3}, clean half {:.3} -> {}",
            method.name(),
            result.final_test_acc(),
            up_hit as f64 / up_n as f64,
            low_hit as f64 / low_n as f64,
            path.display()
        );
    }
    println!("\nplot the grids (x0, x1 colored by argmax) to see where Lq degenerates.");
    Ok(())
}
