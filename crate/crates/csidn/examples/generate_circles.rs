//! Generate the clean concentric-circles dataset and write it to CSV.
//!
//! ```text
//! cargo run --release -p csidn --example generate_circles
//! ```

use csidn::data::{write_csv, CirclesSpec};

fn main() -> csidn::Result<()> {
    let spec = CirclesSpec {
        radii: vec![1.0, 2.0, 3.0],
        radial_std: 0.15,
        per_class: 1000,
        seed: 42,
    };
    let data = spec.generate()?;
    println!(
        "{} points, {} classes, {} features",
        data.len(),
        data.num_classes,
        data.dim()
    );

    // The closed-form posterior is what the exact confidence scores and the
    // estimation oracles are built on.
    for x in [[0.0, 1.0], [1.5, 0.0], [0.0, -2.6]] {
        let post = spec.bayes_posterior(&x);
        println!(
            "P(Y | x = {x:?}) = [{}]",
            post.iter()
                .map(|p| format!("{p:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }

    let out = std::path::Path::new("runs/examples/circles.csv");
    std::fs::create_dir_all(out.parent().unwrap())?;
    write_csv(&data, out)?;
    println!("wrote {}", out.display());
    Ok(())
}
