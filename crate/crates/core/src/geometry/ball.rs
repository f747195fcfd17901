use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use super::{normal, AdmissibleBall, AxisBox};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureMethod {
    ExactProduct,
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: MeasureMethod,
}

/// Error bound attributed to one CDF difference.
const CDF_ERROR: f64 = 4.0 * f64::EPSILON;

/// `gamma(Q)` for a box, as a product of one-dimensional CDF differences.
pub fn gaussian_measure_box(q: &AxisBox) -> MeasureEstimate {
    let value = q.lower.iter().zip(&q.upper).map(|(a, b)| normal::interval(*a, *b)).product();
    MeasureEstimate { value, abs_error: q.dim() as f64 * CDF_ERROR, method: MeasureMethod::ExactProduct }
}

/// `gamma(B)` to absolute accuracy `tol`.
///
/// n = 1 is exact. n = 2 integrates the chord-wise CDF difference with
/// Gauss-Legendre rules of doubling degree. n >= 3 uses randomly shifted
/// Halton points and reports three standard errors across shifts.
pub fn gaussian_measure_ball(ball: &AdmissibleBall, tol: f64) -> Result<MeasureEstimate> {
    if !(tol > 0.0) {
        return Err(invalid("ball measure tolerance must be positive"));
    }
    match ball.dim() {
        1 => {
            let c = ball.center[0];
            Ok(MeasureEstimate {
                value: normal::interval(c - ball.radius, c + ball.radius),
                abs_error: CDF_ERROR,
                method: MeasureMethod::ExactProduct,
            })
        }
        2 => disk_measure(&ball.center, ball.radius, tol, 1e-13),
        _ => qmc_ball_measure(&ball.center, ball.radius, tol),
    }
}

/// `gamma(B(center, r))` with high relative accuracy, for internal caches.
///
/// Quasi-Monte Carlo in n >= 3 is limited to about 1e-6 relative accuracy.
pub fn ball_measure(center: &[f64], r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    match center.len() {
        1 => normal::interval(center[0] - r, center[0] + r),
        2 => disk_measure(center, r, f64::INFINITY, 1e-12).map(|m| m.value).unwrap_or(f64::NAN),
        _ => {
            let rough = qmc_ball_measure(center, r, f64::INFINITY).map(|m| m.value).unwrap_or(0.0);
            qmc_ball_measure(center, r, (rough * 1e-6).max(f64::MIN_POSITIVE))
                .or_else(|e| match e {
                    Error::ToleranceUnreachable { .. } => qmc_ball_measure(center, r, f64::INFINITY),
                    other => Err(other),
                })
                .map(|m| m.value)
                .unwrap_or(f64::NAN)
        }
    }
}

const GL_MIN_DEGREE: usize = 16;
const GL_LEVELS: usize = 9; // degrees 16 .. 4096

fn legendre_rules() -> &'static [GaussLegendre] {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    RULES.get_or_init(|| {
        (0..GL_LEVELS)
            .map(|i| GaussLegendre::new(NonZeroUsize::new(GL_MIN_DEGREE << i).expect("nonzero degree")))
            .collect()
    })
}

/// Disk measure as an integral over the chord angle: with `x1 = c1 + r sin(th)`
/// the chord half-length is `r cos(th)` and the integrand is smooth on
/// `[-pi/2, pi/2]`.
fn disk_measure(center: &[f64], r: f64, tol: f64, rel: f64) -> Result<MeasureEstimate> {
    let (c1, c2) = (center[0], center[1]);
    let integrand = |th: f64| {
        let (s, c) = th.sin_cos();
        let half = r * c;
        r * c * normal::density(c1 + r * s) * normal::interval(c2 - half, c2 + half)
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let rules = legendre_rules();
    let mut prev = rules[0].integrate(-half_pi, half_pi, integrand);
    let mut diff = f64::INFINITY;
    for rule in &rules[1..] {
        let next = rule.integrate(-half_pi, half_pi, integrand);
        diff = (next - prev).abs();
        prev = next;
        if diff <= tol.min(rel * next.abs()) || next == 0.0 {
            return Ok(MeasureEstimate { value: next.max(0.0), abs_error: diff, method: MeasureMethod::Quadrature });
        }
    }
    if diff <= tol {
        Ok(MeasureEstimate { value: prev.max(0.0), abs_error: diff, method: MeasureMethod::Quadrature })
    } else {
        Err(Error::ToleranceUnreachable { tol, achieved: diff })
    }
}

const QMC_SHIFTS: usize = 16;
const QMC_MIN_POINTS: usize = 1 << 10;
const QMC_MAX_POINTS: usize = 1 << 16;
const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

fn qmc_ball_measure(center: &[f64], r: f64, tol: f64) -> Result<MeasureEstimate> {
    let n = center.len();
    if n > PRIMES.len() {
        return Err(invalid(format!("ball measure supports n <= {}", PRIMES.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba11);
    let shifts: Vec<Vec<f64>> = (0..QMC_SHIFTS).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    let norm_const = (2.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0);
    let volume = (2.0 * r).powi(n as i32);
    let mut sums = vec![0.0; QMC_SHIFTS];
    let mut done = 0usize;
    let mut target = QMC_MIN_POINTS;
    let mut u = vec![0.0; n];
    loop {
        for i in done..target {
            for (s, shift) in shifts.iter().enumerate() {
                let mut r2 = 0.0;
                let mut x2 = 0.0;
                for d in 0..n {
                    let v = (radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d]).fract();
                    u[d] = (2.0 * v - 1.0) * r;
                    r2 += u[d] * u[d];
                    let x = center[d] + u[d];
                    x2 += x * x;
                }
                if r2 < r * r {
                    sums[s] += norm_const * (-0.5 * x2).exp();
                }
            }
        }
        done = target;
        let estimates: Vec<f64> = sums.iter().map(|s| volume * s / done as f64).collect();
        let mean = estimates.iter().sum::<f64>() / QMC_SHIFTS as f64;
        let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (QMC_SHIFTS - 1) as f64;
        let err = 3.0 * (var / QMC_SHIFTS as f64).sqrt();
        if err <= tol {
            return Ok(MeasureEstimate { value: mean, abs_error: err, method: MeasureMethod::MonteCarlo });
        }
        if target >= QMC_MAX_POINTS {
            return Err(Error::ToleranceUnreachable { tol, achieved: err });
        }
        target *= 2;
    }
}
