//! One-dimensional standard normal helpers.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `Phi(b) - Phi(a)` for `a <= b`, evaluated on the tail that avoids cancellation.
pub fn interval(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b || a.is_nan() || b.is_nan());
    if a >= 0.0 {
        (sf(a) - sf(b)).max(0.0)
    } else if b <= 0.0 {
        (cdf(b) - cdf(a)).max(0.0)
    } else {
        (1.0 - sf(b) - cdf(a)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit reference values (mpmath ncdf).
    const PHI1_MINUS_PHI0: f64 = 0.341_344_746_068_542_948_585_232_545_632;
    const TAIL_8_9: f64 = 6.219_831_985_865_830_282_868_259_622_5e-16;

    #[test]
    fn interval_matches_reference() {
        assert!((interval(0.0, 1.0) - PHI1_MINUS_PHI0).abs() < 1e-15);
        assert!((interval(-1.0, 0.0) - PHI1_MINUS_PHI0).abs() < 1e-15);
        let tail = interval(8.0, 9.0);
        assert!(((tail - TAIL_8_9) / TAIL_8_9).abs() < 1e-12, "{tail}");
        let tail = interval(-9.0, -8.0);
        assert!(((tail - TAIL_8_9) / TAIL_8_9).abs() < 1e-12, "{tail}");
    }

    #[test]
    fn whole_line() {
        assert_eq!(interval(f64::NEG_INFINITY, f64::INFINITY), 1.0);
        assert_eq!(interval(-40.0, 40.0), 1.0);
    }
}
