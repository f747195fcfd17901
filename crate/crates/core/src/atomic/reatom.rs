use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{admissibility_radius, box_distance, distance, norm, AdmissibleBall, Point};
use crate::tent::{AtomRecord, NormConfig, TentFunction};

/// Margin kept in the strict inequalities fixing `R` and `delta`.
pub const REATOM_MARGIN: f64 = 0.01;
const DELTAS: [f64; 12] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01];

/// `alpha x / (x + alpha)` with `x = R - beta`.
fn reach_ratio(alpha: f64, x: f64) -> f64 {
    alpha * x / (x + alpha)
}

/// The constants of the covering: the cut radius `R` and the shrink factor
/// `delta` used for balls with `|c| >= R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReatomConstants {
    pub beta: f64,
    pub alpha: f64,
    pub r_cut: f64,
    pub delta: f64,
}

pub fn reatom_constants(beta: f64, alpha: f64) -> Result<ReatomConstants> {
    let target = 1.0 + REATOM_MARGIN;
    if !(alpha > target) {
        return Err(invalid(format!("target aperture must exceed {target}, got {alpha}")));
    }
    // Smallest R - beta with alpha x / (x + alpha) > 1 + margin, then grow it
    // until one of the listed deltas fits.
    let mut x = target * alpha / (alpha - target) * (1.0 + 1e-9);
    x = x.max(2.0);
    for _ in 0..64 {
        let ratio = reach_ratio(alpha, x);
        if let Some(&delta) = DELTAS.iter().find(|&&d| (1.0 - d) * ratio > target) {
            return Ok(ReatomConstants { beta, alpha, r_cut: beta + x, delta });
        }
        x *= 2.0;
    }
    Err(invalid(format!("no shrink factor fits alpha = {alpha}")))
}

#[derive(Clone, Debug)]
pub struct Reatoming {
    /// `None` when the atom is returned unchanged.
    pub constants: Option<ReatomConstants>,
    /// Whether the far-ball construction (`|c| >= R`) was used.
    pub far: bool,
    pub balls: usize,
    pub pieces: Vec<AtomRecord>,
    pub max_multiplicity: usize,
    /// Largest `||f_j||_q gamma(B_j)^{1/q'}`.
    pub constant: f64,
}

/// Balls `B(c', r')` covering `T_1(B) ∩ D` by their tents, one per cell of a
/// cubic grid over `B`, centred at the point of the cell nearest to `c`.
/// Far out the cells have diameter `delta r'_min` and `r' = alpha / |c'|`;
/// otherwise `r' = alpha m(c')` and the cells are small against `m` on `B`.
fn cover_balls(ball: &AdmissibleBall, k: &ReatomConstants) -> (bool, Vec<AdmissibleBall>) {
    let c = ball.center.coords();
    let n = c.len();
    let r = ball.radius;
    let sqrt_n = (n as f64).sqrt();
    let far = norm(c) >= k.r_cut;
    let (side, radius): (f64, Box<dyn Fn(&[f64]) -> f64>) = if far {
        let r_min = k.alpha / (norm(c) + r);
        (k.delta * r_min / sqrt_n, Box::new(move |p: &[f64]| k.alpha / norm(p)))
    } else {
        let eps = 0.5 * (k.alpha.sqrt() - 1.0);
        (eps / (sqrt_n * (k.r_cut + k.beta)), Box::new(move |p: &[f64]| k.alpha * admissibility_radius(p)))
    };
    let steps = (2.0 * r / side).ceil() as i64;
    let mut out = Vec::new();
    let mut g = vec![0i64; n];
    loop {
        let lower: Vec<f64> = (0..n).map(|d| c[d] - r + g[d] as f64 * side).collect();
        let upper: Vec<f64> = lower.iter().map(|v| v + side).collect();
        if box_distance(&lower, &upper, c) < r {
            let p: Vec<f64> = (0..n).map(|d| c[d].clamp(lower[d], upper[d])).collect();
            let rr = radius(&p);
            out.push(AdmissibleBall::new(Point::new(p).expect("finite"), rr).expect("positive radius"));
        }
        let mut d = n;
        loop {
            if d == 0 {
                return (far, out);
            }
            d -= 1;
            g[d] += 1;
            if g[d] < steps {
                break;
            }
            g[d] = 0;
        }
    }
}

/// Re-expresses an atom at scale `beta` through pieces supported in tents
/// over `B_alpha` balls, splitting values evenly among the covering tents.
pub fn reatom(a: &AtomRecord, alpha: f64, cfg: &NormConfig) -> Result<Reatoming> {
    let beta = a.alpha;
    if alpha >= beta {
        return Ok(Reatoming { constants: None, far: false, balls: 1, pieces: vec![a.clone()], max_multiplicity: 1, constant: a.size_ratio() });
    }
    let constants = reatom_constants(beta, alpha)?;
    let (far, balls) = cover_balls(&a.ball, &constants);
    let grid = a.f.grid();
    let mut owners: Vec<Vec<usize>> = Vec::new();
    let mut max_multiplicity = 0;
    for (idx, _) in a.f.entries() {
        let (j, s) = grid.split(idx);
        let y = grid.center(j);
        let t = grid.t_levels()[s];
        let hit: Vec<usize> = balls.iter().enumerate().filter(|(_, b)| b.radius - distance(&y, b.center.coords()) >= t).map(|(i, _)| i).collect();
        if hit.is_empty() {
            return Err(Error::Discretisation(format!("active pair ({j}, {s}) is in no covering tent")));
        }
        max_multiplicity = max_multiplicity.max(hit.len());
        owners.push(hit);
    }
    let mut parts: Vec<Vec<(usize, f64)>> = vec![Vec::new(); balls.len()];
    for ((idx, v), hit) in a.f.entries().zip(&owners) {
        let share = v / hit.len() as f64;
        for &i in hit {
            parts[i].push((idx, share));
        }
    }
    let mut pieces = Vec::new();
    for (ball, entries) in balls.iter().zip(parts) {
        if entries.is_empty() {
            continue;
        }
        let f = TentFunction::from_entries(grid.clone(), entries)?;
        pieces.push(AtomRecord::new(ball.clone(), alpha, f, cfg)?);
    }
    let constant = pieces.iter().map(|p| p.size_ratio()).fold(0.0, f64::max);
    Ok(Reatoming { constants: Some(constants), far, balls: balls.len(), pieces, max_multiplicity, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tent::{make_atom, DGrid, DGridSpec};
    use std::sync::Arc;

    fn atom_at(c: f64, beta: f64, g: &Arc<DGrid>) -> AtomRecord {
        let r = beta * admissibility_radius(&[c]);
        let ball = AdmissibleBall::new(Point::new(vec![c]).unwrap(), r).unwrap();
        let profile = TentFunction::from_fn(g.clone(), |y, t| if r - (y[0] - c).abs() >= t { 1.0 + t } else { 0.0 }).unwrap();
        make_atom(ball, beta, &profile, &NormConfig::new(2.0).unwrap()).unwrap()
    }

    #[test]
    fn constants_satisfy_the_strict_inequalities() {
        for (beta, alpha) in [(2.0, 1.5), (3.0, 1.1), (1.5, 1.05), (4.0, 3.0)] {
            let k = reatom_constants(beta, alpha).unwrap();
            let x = k.r_cut - k.beta;
            assert!(k.r_cut >= beta + 2.0);
            assert!(reach_ratio(alpha, x) > 1.0 + REATOM_MARGIN);
            assert!((1.0 - k.delta) * reach_ratio(alpha, x) > 1.0 + REATOM_MARGIN);
        }
        assert!(reatom_constants(2.0, 1.005).is_err());
    }

    #[test]
    fn larger_target_returns_the_atom() {
        let g = Arc::new(DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 128.0, t_min: 1.0 / 128.0, t_ratio: 2f64.sqrt() }).unwrap());
        let a = atom_at(0.5, 1.2, &g);
        let r = reatom(&a, 2.0, &NormConfig::new(2.0).unwrap()).unwrap();
        assert_eq!(r.pieces.len(), 1);
        assert_eq!(r.pieces[0].f, a.f);
    }

    #[test]
    fn far_and_near_covers_reconstruct_the_atom() {
        let cfg = NormConfig::new(2.0).unwrap();
        let g = Arc::new(DGrid::new(DGridSpec { n: 1, radius: 12.0, h: 1.0 / 512.0, t_min: 1.0 / 512.0, t_ratio: 2f64.sqrt() }).unwrap());
        for (c, far) in [(10.0, true), (0.3, false), (-3.0, false)] {
            let a = atom_at(c, 2.0, &g);
            let r = reatom(&a, 1.5, &cfg).unwrap_or_else(|e| panic!("{c}: {e}"));
            assert_eq!(r.far, far);
            let mut sum = TentFunction::zero(g.clone());
            for p in &r.pieces {
                assert!(p.support_ok);
                assert!(p.ball.scale() <= 1.5 * (1.0 + 1e-12));
                sum = sum.add(&p.f).unwrap();
            }
            assert!(sum.max_abs_diff(&a.f).unwrap() <= 1e-12 * a.f.max_abs());
            assert!(r.constant.is_finite());
        }
    }
}
