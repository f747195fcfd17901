//! Empirical doubling constants for admissible balls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{admissibility_radius, ball_measure};

/// Default half-width of the sampling window for ball centres.
pub const DEFAULT_CENTER_WINDOW: f64 = 8.0;

/// A draw from the standard Gaussian conditioned on `[-r, r]^n`.
pub fn sample_gaussian_center<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let v: f64 = rng.sample(StandardNormal);
            if v.abs() <= r {
                break v;
            }
        })
        .collect()
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let len = super::norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|c| c / len).collect();
        }
    }
}

/// Largest `gamma(B2)/gamma(B1)` over random pairs with `B1` in `B_alpha`,
/// `r2 <= tau r1` and `B1`, `B2` intersecting. Centres come from the Gaussian
/// restricted to `[-8, 8]^n`.
pub fn doubling_ratio_sample(n: usize, alpha: f64, tau: f64, trials: usize, seed: u64) -> f64 {
    doubling_ratio_sample_in(n, alpha, tau, trials, seed, DEFAULT_CENTER_WINDOW)
}

pub fn doubling_ratio_sample_in(n: usize, alpha: f64, tau: f64, trials: usize, seed: u64, window: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // B2 = B1 is always an admissible pair.
    let mut worst: f64 = 1.0;
    for _ in 0..trials {
        let c1 = sample_gaussian_center(&mut rng, n, window);
        let r1 = alpha * admissibility_radius(&c1) * (1.0 - rng.random::<f64>());
        let r2 = tau * r1 * (1.0 - rng.random::<f64>());
        let dir = random_direction(&mut rng, n);
        let gap = (r1 + r2) * rng.random::<f64>();
        let c2: Vec<f64> = c1.iter().zip(&dir).map(|(c, d)| c + gap * d).collect();
        let m1 = ball_measure(&c1, r1);
        if m1 > 0.0 {
            worst = worst.max(ball_measure(&c2, r2) / m1);
        }
    }
    worst
}

/// Largest `gamma(B(x, 2r)) / gamma(B(x, r))` over random `B(x, r)` in `B_alpha`.
pub fn doubling_prime_sample(n: usize, alpha: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 1.0;
    for _ in 0..trials {
        let c = sample_gaussian_center(&mut rng, n, DEFAULT_CENTER_WINDOW);
        let r = alpha * admissibility_radius(&c) * (1.0 - rng.random::<f64>());
        let m = ball_measure(&c, r);
        if m > 0.0 {
            worst = worst.max(ball_measure(&c, 2.0 * r) / m);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pair_bounds_ratio_below() {
        assert!(doubling_ratio_sample(1, 1.0, 1.0, 10, 3) >= 1.0);
        assert!(doubling_ratio_sample(1, 1.0, 1.0, 0, 3) == 1.0);
    }

    #[test]
    fn ratio_is_stable_across_seeds() {
        let a = doubling_ratio_sample(1, 1.0, 2.0, 10_000, 1);
        let b = doubling_ratio_sample(1, 1.0, 2.0, 10_000, 2);
        assert!(a.is_finite() && b.is_finite());
        assert!((a / b - 1.0).abs() < 0.2, "{a} vs {b}");
    }

    #[test]
    fn doubling_prime_is_finite() {
        let d = doubling_prime_sample(2, 1.0, 500, 7);
        assert!(d.is_finite() && d >= 1.0);
        assert_eq!(d, doubling_prime_sample(2, 1.0, 500, 7));
    }

    #[test]
    fn centres_respect_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert!(sample_gaussian_center(&mut rng, 3, 0.5).iter().all(|v| v.abs() <= 0.5));
        }
    }
}
