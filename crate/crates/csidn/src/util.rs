//! Small shared helpers: significant-digit formatting and seed derivation.
//!
//! Public because the binary and downstream consumers reuse the same seed
//! derivation for reproducible splits.

/// Format `v` in scientific notation with `digits` significant digits.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), v)
}

/// Derive an independent sub-seed from a base seed and a label.
///
/// SplitMix64 finalizer; used to decorrelate RNG streams (model init vs.
/// shuffling vs. corruption) that share one user-facing seed.
pub fn derive_seed(base: u64, label: u64) -> u64 {
    let mut z = base ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_sig_digit_count() {
        assert_eq!(fmt_sig(1.0 / 3.0, 9), "3.33333333e-1");
        assert_eq!(fmt_sig(0.25, 6), "2.50000e-1");
        assert_eq!(fmt_sig(-12345.678, 6), "-1.23457e4");
    }

    #[test]
    fn derive_seed_decorrelates() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
