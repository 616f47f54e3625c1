//! Mean and Student-t confidence intervals across seeds.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided confidence interval for the mean of `values`.
///
/// A single value yields a zero-width interval. The spread uses the sample
/// standard deviation and the Student-t quantile at the given level.
pub fn t_interval(values: &[f64], level: f64) -> (f64, f64, f64) {
    let n = values.len();
    assert!(n > 0, "interval of an empty sample");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    let half = t_quantile(level, n - 1) * (var / n as f64).sqrt();
    (mean, mean - half, mean + half)
}

/// Upper quantile `(1 + level) / 2` of Student-t with `df` degrees of freedom.
pub fn t_quantile(level: f64, df: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("valid dof");
    dist.inverse_cdf((1.0 + level) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_value_has_zero_width() {
        assert_eq!(t_interval(&[0.9], 0.95), (0.9, 0.9, 0.9));
    }

    #[test]
    fn known_quantile() {
        // t_{0.975, 4} = 2.7764...
        assert_relative_eq!(t_quantile(0.95, 4), 2.7764, max_relative = 1e-4);
    }

    #[test]
    fn interval_contains_mean_and_has_nonnegative_width() {
        let (mean, lo, hi) = t_interval(&[0.8, 0.85, 0.9, 0.7, 0.75], 0.95);
        assert!(lo <= mean && mean <= hi);
        assert!(hi - lo >= 0.0);
    }

    #[test]
    fn width_shrinks_with_more_seeds_at_fixed_variance() {
        // t_{0.975, n-1} / sqrt(n) is monotone decreasing in n.
        let mut prev = f64::INFINITY;
        for n in 2..30 {
            let width = t_quantile(0.95, n - 1) / (n as f64).sqrt();
            assert!(width < prev, "width grew at n = {n}");
            prev = width;
        }
    }
}
