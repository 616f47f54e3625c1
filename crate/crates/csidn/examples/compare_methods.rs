//! All training methods side by side on the same corrupted dataset.
//!
//! ```text
//! cargo run --release -p csidn --example compare_methods
//! ```

use csidn::data::{corrupt, CirclesSpec, ConfidenceMode, NoiseSpec};
use csidn::train::{run_method, Method, TrainConfig};
use csidn::util::derive_seed;

fn main() -> csidn::Result<()> {
    let gen = CirclesSpec {
        per_class: 500,
        seed: 42,
        ..CirclesSpec::default()
    };
    let train = gen.generate()?;
    let test = gen.with_samples(300, derive_seed(42, 0x7465)).generate()?;
    let spec = NoiseSpec::csidn(vec![0.0, 1.0], 1.0, ConfidenceMode::ExactPosterior, 9);
    let noisy = corrupt(&train, &spec, Some(&gen))?;
    println!(
        "mean noise rate {:.3}; 40 epochs, one seed\n",
        noisy.measured_noise_rate().unwrap()
    );

    println!("method       final-acc  last10-mean");
    for method in [
        Method::Naive,
        Method::Ilfc,
        Method::Fc,
        Method::Mae,
        Method::Lq,
        Method::Coteaching,
    ] {
        let cfg = TrainConfig {
            method,
            epochs: 40,
            seed: 1,
            ..TrainConfig::default()
        };
        let (_, result) = run_method(&noisy, &test, &cfg)?;
        println!(
            "{:<12} {:>9.4}  {:>11.4}",
            method.name(),
            result.final_test_acc(),
            result.last_n_mean_test_acc(10)
        );
    }
    Ok(())
}
