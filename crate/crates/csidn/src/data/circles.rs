//! Concentric-circles synthetic distribution.
//!
//! Class `k` points have a uniform angle and a radius drawn from
//! `Normal(radii[k], radial_std)`. The class posterior of the mixture is
//! available in closed form, which the corruption and estimation oracles rely
//! on.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::data::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirclesSpec {
    /// One radius per class, strictly increasing.
    pub radii: Vec<f64>,
    /// Radial standard deviation; zero collapses every point onto its circle.
    pub radial_std: f64,
    pub per_class: usize,
    pub seed: u64,
}

impl Default for CirclesSpec {
    fn default() -> Self {
        Self {
            radii: vec![1.0, 2.0, 3.0],
            radial_std: 0.15,
            per_class: 1000,
            seed: 0,
        }
    }
}

impl CirclesSpec {
    pub fn num_classes(&self) -> usize {
        self.radii.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::Config("circles need at least one radius".into()));
        }
        if self.radii[0] <= 0.0 || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "circle radii must be positive and strictly increasing".into(),
            ));
        }
        if self.radial_std < 0.0 {
            return Err(Error::Config("radial_std must be non-negative".into()));
        }
        if self.per_class == 0 {
            return Err(Error::Config("per_class must be positive".into()));
        }
        Ok(())
    }

    /// Same distribution with a different sample count and seed; used to draw
    /// disjoint test sets.
    pub fn with_samples(&self, per_class: usize, seed: u64) -> Self {
        Self {
            per_class,
            seed,
            ..self.clone()
        }
    }

    /// Closed-form class posterior at `x` (equal class priors).
    ///
    /// Densities share the uniform-angle and Jacobian factors, so the
    /// posterior reduces to normalized Gaussian weights in `|x| - radii[k]`.
    /// With `radial_std == 0` the posterior is one-hot at the nearest radius.
    pub fn bayes_posterior(&self, x: &[f64]) -> Vec<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let k = self.num_classes();
        if self.radial_std == 0.0 {
            let nearest = (0..k)
                .min_by(|&a, &b| {
                    (r - self.radii[a])
                        .abs()
                        .partial_cmp(&(r - self.radii[b]).abs())
                        .expect("finite")
                })
                .expect("non-empty");
            let mut post = vec![0.0; k];
            post[nearest] = 1.0;
            return post;
        }
        let inv_two_var = 1.0 / (2.0 * self.radial_std * self.radial_std);
        let logs: Vec<f64> = self
            .radii
            .iter()
            .map(|&rk| -(r - rk) * (r - rk) * inv_two_var)
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
        let sum: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / sum).collect()
    }

    /// Draw the dataset. Each point uses its own ChaCha stream (indexed by
    /// `class * per_class + i`), so generation order or sharding cannot change
    /// the output.
    pub fn generate(&self) -> Result<Dataset> {
        self.validate()?;
        let k = self.num_classes();
        let n = k * self.per_class;
        let mut features = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        let normal = if self.radial_std > 0.0 {
            Some(Normal::new(0.0, self.radial_std).expect("validated std"))
        } else {
            None
        };
        for class in 0..k {
            for i in 0..self.per_class {
                let row = class * self.per_class + i;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(row as u64);
                let angle = rng.gen_range(0.0..TAU);
                let radius = match &normal {
                    Some(d) => self.radii[class] + d.sample(&mut rng),
                    None => self.radii[class],
                };
                features[(row, 0)] = radius * angle.cos();
                features[(row, 1)] = radius * angle.sin();
                labels.push(class);
            }
        }
        Ok(Dataset {
            features,
            clean_labels: Some(labels.clone()),
            noisy_labels: labels,
            confidence: None,
            num_classes: k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_puts_points_on_their_circle() {
        let spec = CirclesSpec {
            radial_std: 0.0,
            per_class: 50,
            ..CirclesSpec::default()
        };
        let ds = spec.generate().unwrap();
        for i in 0..ds.len() {
            let x = ds.features.row(i);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let class = ds.noisy_labels[i];
            assert!((r - spec.radii[class]).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = CirclesSpec {
            per_class: 100,
            seed: 5,
            ..CirclesSpec::default()
        };
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
    }

    #[test]
    fn posterior_sums_to_one_and_tracks_radius() {
        let spec = CirclesSpec::default();
        for (x, expect_class) in [([0.0, 1.05], 0), ([2.1, 0.0], 1), ([0.0, -2.9], 2)] {
            let post = spec.bayes_posterior(&x);
            assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let argmax = post
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, expect_class);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = CirclesSpec::default();
        spec.radii = vec![1.0, 1.0, 3.0];
        assert!(spec.validate().is_err());
        spec.radii = vec![1.0, 2.0];
        spec.per_class = 0;
        assert!(spec.validate().is_err());
    }
}
