use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{rng_for, Check, SuiteReport};
use crate::config::SessionConfig;
use crate::error::Result;
use crate::geometry::{admissibility_radius, gaussian_measure_ball, normal, sample_gaussian_center, AdmissibleBall, Point};
use crate::grid::{cubes_in_layer, layer_cube_count, layer_of, GaussianCube};

const CHUNKS: u64 = 64;

pub(super) fn direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let len = crate::geometry::norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|c| c / len).collect();
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Points spread over many scales, with extra mass around the kink `|x| = 1`.
fn spread_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let len = if rng.random::<f64>() < 0.8 { log_uniform(rng, 1e-3, 1e3) } else { 0.5 + 1.5 * rng.random::<f64>() };
    direction(rng, n).into_iter().map(|d| d * len).collect()
}

fn offset(x: &[f64], dir: &[f64], s: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, d)| a + s * d).collect()
}

#[derive(Default, Clone, Copy)]
struct Tally {
    violations: [usize; 3],
    worst: [f64; 3],
}

impl Tally {
    fn record(&mut self, clause: usize, lhs: f64, rhs: f64) {
        self.worst[clause] = self.worst[clause].max(lhs / rhs);
        if lhs > rhs {
            self.violations[clause] += 1;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for c in 0..3 {
            self.violations[c] += other.violations[c];
            self.worst[c] = self.worst[c].max(other.worst[c]);
        }
        self
    }
}

/// Transfer of admissibility between nearby points, sampled in n = 1, 2, 3.
pub fn transfer_suite(cfg: &SessionConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(1, super::SUITES[0].1);
    let samples = cfg.samples.transfer as u64;
    for n in 1..=3usize {
        let tally = (0..CHUNKS)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = rng_for(cfg.seed.wrapping_add(chunk), 100 + n as u32);
                let mut t = Tally::default();
                let count = samples / CHUNKS + u64::from(chunk < samples % CHUNKS);
                for _ in 0..count {
                    let a = log_uniform(&mut rng, 1e-2, 1e2);
                    let b = log_uniform(&mut rng, 1e-2, 1e2);
                    let x = spread_point(&mut rng, n);
                    let mx = admissibility_radius(&x);

                    let r = a * mx * (1.0 - rng.random::<f64>());
                    let y = offset(&x, &direction(&mut rng, n), b * r * rng.random::<f64>());
                    t.record(0, r, a * (1.0 + a * b) * admissibility_radius(&y));

                    let y = offset(&x, &direction(&mut rng, n), b * mx * rng.random::<f64>());
                    let my = admissibility_radius(&y);
                    t.record(1, mx, (1.0 + b) * my);
                    t.record(2, my, (2.0 + 2.0 * b) * mx);
                }
                t
            })
            .reduce(Tally::default, Tally::merge);
        let names = ["radius", "m(x) by m(y)", "m(y) by m(x)"];
        for c in 0..3 {
            report.check(Check::zero(format!("n={n} {} violations", names[c]), tally.violations[c]));
            report.constant(&format!("n{n}_worst_ratio_{c}"), tally.worst[c]);
        }
    }
    Ok(report)
}

fn random_layer_cube<R: Rng + ?Sized>(rng: &mut R, n: usize, l: u32) -> GaussianCube {
    let outer = 1i64 << (2 * l);
    let inner = outer / 2;
    loop {
        let index: Vec<i64> = (0..n).map(|_| rng.random_range(-outer..outer)).collect();
        if index.iter().any(|&i| i < -inner || i >= inner) {
            return GaussianCube::new(0, l, index).expect("index lies in the layer");
        }
    }
}

/// Centres of admissible balls meeting a cube of layer `l >= p + 2` lie in
/// the neighbouring layers.
pub fn layer_suite(cfg: &SessionConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(2, super::SUITES[1].1);
    let samples = cfg.samples.layers as u64;
    for p in 1..=3u32 {
        let (misses, max_jump) = (0..CHUNKS)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = rng_for(cfg.seed.wrapping_add(chunk), 200 + p);
                let alpha = 2f64.powi(p as i32);
                let (mut misses, mut max_jump) = (0usize, 0i64);
                let count = samples / CHUNKS + u64::from(chunk < samples % CHUNKS);
                for i in 0..count {
                    let n = 1 + (i % 3) as usize;
                    let l = rng.random_range(p + 2..=p + 10);
                    let q = random_layer_cube(&mut rng, n, l);
                    let z: Vec<f64> = q.lower().iter().map(|a| a + q.side() * rng.random::<f64>()).collect();
                    let dir = direction(&mut rng, n);
                    // Distance from the contact point z to the centre, biased
                    // towards the largest admissible radius.
                    let (c, s) = loop {
                        let s = 1.2 * alpha * admissibility_radius(&z) * rng.random::<f64>();
                        let c = offset(&z, &dir, s);
                        if s < alpha * admissibility_radius(&c) {
                            break (c, s);
                        }
                    };
                    let r_max = alpha * admissibility_radius(&c);
                    let r = s + (r_max - s) * (1.0 - rng.random::<f64>());
                    debug_assert!(crate::geometry::distance(&c, &z) < r && r <= r_max);
                    let jump = (layer_of(&c) as i64 - l as i64).abs();
                    max_jump = max_jump.max(jump);
                    misses += usize::from(jump > 1);
                }
                (misses, max_jump)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1.max(b.1)));
        report.check(Check::zero(format!("p={p} centres outside neighbouring layers"), misses));
        report.constant(&format!("p{p}_max_layer_jump"), max_jump as f64);
    }
    Ok(report)
}

fn square_measure(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    normal::interval(x0, x1) * normal::interval(y0, y1)
}

/// Rigorous bracket of `gamma(B(c, r))` in the plane: squares inside the
/// disk count on both sides, squares meeting the circle only on the upper one.
fn disk_bracket(c: &[f64], r: f64, base: usize, depth: u32) -> (f64, f64) {
    fn visit(c: &[f64], r: f64, sq: [f64; 4], depth: u32, acc: &mut (f64, f64)) {
        let [x0, x1, y0, y1] = sq;
        let nx = c[0].clamp(x0, x1) - c[0];
        let ny = c[1].clamp(y0, y1) - c[1];
        if nx * nx + ny * ny >= r * r {
            return;
        }
        let fx = (c[0] - x0).abs().max((c[0] - x1).abs());
        let fy = (c[1] - y0).abs().max((c[1] - y1).abs());
        if fx * fx + fy * fy < r * r {
            let m = square_measure(x0, x1, y0, y1);
            acc.0 += m;
            acc.1 += m;
            return;
        }
        if depth == 0 {
            acc.1 += square_measure(x0, x1, y0, y1);
            return;
        }
        let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        for s in [[x0, xm, y0, ym], [xm, x1, y0, ym], [x0, xm, ym, y1], [xm, x1, ym, y1]] {
            visit(c, r, s, depth - 1, acc);
        }
    }
    let side = 2.0 * r / base as f64;
    let mut acc = (0.0, 0.0);
    for i in 0..base {
        for j in 0..base {
            let x0 = c[0] - r + i as f64 * side;
            let y0 = c[1] - r + j as f64 * side;
            visit(c, r, [x0, x0 + side, y0, y0 + side], depth, &mut acc);
        }
    }
    acc
}

/// Ball measures against a brute-force square-sum bracket (n = 2).
pub fn oracle_suite(cfg: &SessionConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(11, super::SUITES[10].1);
    let tol = cfg.tolerances.ball;
    let mut rng = rng_for(cfg.seed, 1100);
    let balls: Vec<AdmissibleBall> = (0..cfg.samples.oracle_balls)
        .map(|_| {
            let c = sample_gaussian_center(&mut rng, 2, 6.0);
            let alpha = 2.0 * (1.0 - rng.random::<f64>());
            let r = (alpha * admissibility_radius(&c) * (1.0 - rng.random::<f64>())).max(1e-3);
            AdmissibleBall::new(Point::new(c).expect("finite centre"), r).expect("positive radius")
        })
        .collect();
    let results: Vec<(f64, f64, f64)> = balls
        .par_iter()
        .map(|b| {
            let est = gaussian_measure_ball(b, tol)?;
            let (lo, hi) = disk_bracket(&b.center, b.radius, 16, 11);
            Ok((est.value, lo, hi))
        })
        .collect::<Result<_>>()?;
    let (mut outside, mut width, mut excess) = (0usize, 0.0f64, 0.0f64);
    for (v, lo, hi) in results {
        // Summation error of the bracket itself.
        let slack = tol + 1e-12 * hi;
        if v < lo - slack || v > hi + slack {
            outside += 1;
        }
        width = width.max((hi - lo) / hi);
        excess = excess.max((lo - v).max(v - hi).max(0.0));
    }
    report.check(Check::zero("ball measures outside the oracle bracket", outside));
    report.constant("oracle_max_relative_width", width);
    report.constant("oracle_max_excess", excess);
    Ok(report)
}

/// `#Delta_{0,l}` for `l <= 6` against `2^{2ln}(2^n - 1)` and enumeration.
pub fn cube_count_suite() -> SuiteReport {
    let mut report = SuiteReport::new(11, super::SUITES[10].1);
    let mut formula_errors = 0usize;
    let mut enumeration_errors = 0usize;
    for n in 1..=3usize {
        for l in 0..=6u32 {
            let expected: u128 = if l == 0 { 1 << n } else { (1u128 << (2 * l as usize * n)) * ((1 << n) - 1) };
            let count = layer_cube_count(n, 0, l);
            formula_errors += usize::from(count != Some(expected));
            if expected <= 1 << 21 {
                let mut seen = 0u128;
                for q in cubes_in_layer(n, 0, l) {
                    seen += 1;
                    enumeration_errors += usize::from(layer_of(&q.center()) != l);
                }
                enumeration_errors += usize::from(seen != expected);
            }
        }
    }
    report.check(Check::zero("layer counts differing from the closed form", formula_errors));
    report.check(Check::zero("enumerated layers differing from the closed form", enumeration_errors));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_contains_exact_square_products() {
        // A disk bracket must contain the measure of an inscribed square and
        // stay below the circumscribed one.
        let (lo, hi) = disk_bracket(&[0.3, -0.2], 0.5, 8, 6);
        let s = 0.5 / 2f64.sqrt();
        assert!(lo >= square_measure(0.3 - s, 0.3 + s, -0.2 - s, -0.2 + s));
        assert!(hi <= square_measure(-0.2, 0.8, -0.7, 0.3));
        assert!((hi - lo) / hi < 0.02);
    }
}
