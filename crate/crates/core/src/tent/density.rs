use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{region_start, SpatialFunction, TentFunction};
use crate::error::{invalid, Error, Result};
use crate::geometry::{admissibility_radius, ball_measure, sample_gaussian_center, DEFAULT_CENTER_WINDOW};
use crate::lattice::{Lattice, RegionMask};

/// Radii per point for density sets and the maximal function.
pub const DEFAULT_RADII: usize = 32;

/// Geometric radii from `(3/2) m` down to `h/2`. The smallest ball holds only
/// the centre cell.
pub fn radius_mesh(m: f64, h: f64, count: usize) -> Vec<f64> {
    let top = 1.5 * m;
    let bottom = 0.5 * h;
    if count < 2 || top <= bottom {
        return vec![top];
    }
    let step = (bottom / top).ln() / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { bottom } else { top * (step * i as f64).exp() }).collect()
}

/// Compensated prefix sums over the flat cell order, so that short ranges far
/// out in the tails keep their relative accuracy.
struct Prefix {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl Prefix {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let mut hi = vec![0.0];
        let mut lo = vec![0.0];
        let (mut s, mut e) = (0.0f64, 0.0f64);
        for v in values {
            let t = s + v;
            let bp = t - s;
            e += (s - (t - bp)) + (v - bp);
            s = t;
            hi.push(s);
            lo.push(e);
        }
        Prefix { hi, lo }
    }

    fn range(&self, a: usize, b: usize) -> f64 {
        (self.hi[b] - self.hi[a]) + (self.lo[b] - self.lo[a])
    }

    fn ball(&self, lattice: &Lattice, c: &[f64], r: f64) -> f64 {
        let mut total = 0.0;
        lattice.for_each_ball_row(c, r, |start, len| total += self.range(start, start + len));
        total
    }
}

/// Points of the window whose every ball `B(x, r)` on the radius mesh sees
/// `F` with lattice density at least `beta`. Balls are clipped to the window;
/// the exterior flag is inherited from `F`.
pub fn density_set(f: &RegionMask, beta: f64, radii: usize) -> Result<RegionMask> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("density must lie in (0,1], got {beta}")));
    }
    let lattice = f.lattice();
    let weights = lattice.cell_measures();
    let all = Prefix::new(weights.iter().copied());
    let inside = Prefix::new(weights.iter().zip(f.cells()).map(|(w, &c)| if c { *w } else { 0.0 }));
    // Balls are clipped to the window, so only window cells outside F matter.
    let to_out = f.clone().with_exterior(true).complement_distance_field();
    let h = lattice.h();
    let cells: Vec<bool> = (0..lattice.len())
        .into_par_iter()
        .map(|x| {
            if !f.contains_cell(x) {
                return false;
            }
            let c = lattice.center(x);
            let m = admissibility_radius(&c);
            if to_out[x] >= 1.5 * m {
                return true;
            }
            radius_mesh(m, h, radii).into_iter().all(|r| inside.ball(lattice, &c, r) >= beta * all.ball(lattice, &c, r))
        })
        .collect();
    Ok(RegionMask::from_cells(lattice.clone(), cells)?.with_exterior(f.exterior()))
}

/// `sup_r` of `int_{B(x,r)} |f| dgamma / gamma(B(x,r))` over the radius mesh,
/// with lattice measures.
pub fn maximal_function(f: &SpatialFunction, x: &[f64], radii: usize) -> f64 {
    let grid = f.grid();
    let lattice = grid.lattice();
    let w = grid.weights();
    radius_mesh(admissibility_radius(x), lattice.h(), radii)
        .into_iter()
        .filter_map(|r| {
            let (mut num, mut den) = (0.0, 0.0);
            lattice.for_each_ball_row(x, r, |start, len| {
                for i in start..start + len {
                    num += f.values[i].abs() * w[i];
                    den += w[i];
                }
            });
            (den > 0.0).then(|| num / den)
        })
        .fold(0.0, f64::max)
}

/// [`maximal_function`] at every cell centre.
pub fn maximal_function_field(f: &SpatialFunction, radii: usize) -> Vec<f64> {
    let grid = f.grid();
    let lattice = grid.lattice();
    let w = grid.weights();
    let all = Prefix::new(w.iter().copied());
    let num = Prefix::new(w.iter().zip(&f.values).map(|(w, v)| w * v.abs()));
    (0..lattice.len())
        .into_par_iter()
        .map(|x| {
            let c = lattice.center(x);
            radius_mesh(admissibility_radius(&c), lattice.h(), radii)
                .into_iter()
                .map(|r| num.ball(lattice, &c, r) / all.ball(lattice, &c, r))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Both sides of the density averaging estimate for one `(F, H)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityAveraging {
    /// `sum |H| dgamma dt/t` over `R_{1-eta}(F^[eta_bar])`.
    pub lhs: f64,
    /// `int_F sum 1_{B(y,t)}(x) / gamma(B(y,t)) |H| dgamma dt/t dgamma(x)`.
    pub rhs: f64,
    pub ratio: f64,
    /// Smallest `gamma_h(F ∩ B(y,t)) / gamma(B(y,t))` over the tested pairs.
    pub c_prime: f64,
    /// Pairs of `supp H` lying in the region.
    pub tested: usize,
}

pub fn verify_density_averaging(f: &RegionMask, h: &TentFunction, eta: f64, eta_bar: f64, radii: usize) -> Result<DensityAveraging> {
    if !(eta > 0.5 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (1/2, 1), got {eta}")));
    }
    let grid = h.grid();
    if f.lattice() != grid.lattice() {
        return Err(Error::GridMismatch);
    }
    let dense = density_set(f, eta_bar, radii)?;
    let start = region_start(grid, &dense, 1.0 - eta);
    let lattice = grid.lattice();
    let inside = Prefix::new(grid.weights().iter().zip(f.cells()).map(|(w, &c)| if c { *w } else { 0.0 }));
    let entries: Vec<(usize, f64)> = h.entries().collect();
    let terms: Vec<(f64, f64, bool)> = entries
        .par_iter()
        .map(|&(a, v)| {
            let (j, s) = grid.split(a);
            let mass = v.abs() * grid.mass(j);
            let ratio = inside.ball(lattice, &grid.center(j), grid.t_levels()[s]) / grid.ball(a);
            (mass, ratio, s >= start[j])
        })
        .collect();
    let mut out = DensityAveraging { lhs: 0.0, rhs: 0.0, ratio: 0.0, c_prime: f64::INFINITY, tested: 0 };
    for (mass, ratio, in_region) in terms {
        out.rhs += ratio * mass;
        if in_region {
            out.lhs += mass;
            out.c_prime = out.c_prime.min(ratio);
            out.tested += 1;
        }
    }
    out.ratio = if out.rhs > 0.0 { out.lhs / out.rhs } else { 0.0 };
    Ok(out)
}

/// Choice of `eta_bar` from sampled balls `B(x,t)` in `B_{3/2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBarCalibration {
    pub eta: f64,
    /// Smallest sampled `gamma(B(x, eta t)) / gamma(B(x, t))`.
    pub min_ratio: f64,
    pub eta_bar: f64,
    /// `eta_bar - 1 + min_ratio`, the margin left in the density estimate.
    pub c: f64,
    pub samples: usize,
}

/// Takes `eta_bar = 1 - min_ratio / 2`, the midpoint of the range on which
/// `(eta_bar - 1) gamma(B(x,t)) + gamma(B(x, eta t))` stays a positive multiple
/// of `gamma(B(x,t))` over the sample.
pub fn calibrate_eta_bar(n: usize, eta: f64, samples: usize, seed: u64) -> Result<EtaBarCalibration> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (0,1), got {eta}")));
    }
    if n == 0 || samples == 0 {
        return Err(invalid("calibration needs a dimension and at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = 1.0f64;
    for _ in 0..samples {
        let x = sample_gaussian_center(&mut rng, n, DEFAULT_CENTER_WINDOW);
        let t = 1.5 * admissibility_radius(&x) * (1.0 - rng.random::<f64>());
        let full = ball_measure(&x, t);
        if full > 0.0 {
            min_ratio = min_ratio.min(ball_measure(&x, eta * t) / full);
        }
    }
    let eta_bar = 1.0 - 0.5 * min_ratio;
    Ok(EtaBarCalibration { eta, min_ratio, eta_bar, c: eta_bar - 1.0 + min_ratio, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tent::{DGrid, DGridSpec};
    use std::sync::Arc;

    fn grid() -> Arc<DGrid> {
        Arc::new(DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 64.0, t_min: 1.0 / 64.0, t_ratio: 2f64.powf(0.25) }).unwrap())
    }

    fn interval(g: &DGrid, a: f64, b: f64) -> RegionMask {
        RegionMask::from_fn(g.lattice().clone(), |x| x[0] > a && x[0] < b)
    }

    #[test]
    fn mesh_runs_from_admissible_scale_to_one_cell() {
        let r = radius_mesh(0.5, 1.0 / 64.0, 32);
        assert_eq!(r.len(), 32);
        assert_eq!(r[0], 0.75);
        assert_eq!(r[31], 1.0 / 128.0);
        assert!(r.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn density_set_basics() {
        let g = grid();
        let full = RegionMask::full(g.lattice().clone());
        assert_eq!(density_set(&full, 0.9, 32).unwrap(), full);
        let f = interval(&g, -1.0, 1.0);
        let d = density_set(&f, 0.75, 32).unwrap();
        assert!(d.is_subset_of(&f).unwrap());
        assert!(d.contains_point(&[0.0]));
        assert!(!d.contains_point(&[0.99]));
        let empty = RegionMask::empty(g.lattice().clone());
        assert!(density_set(&empty, 0.5, 32).unwrap().is_empty());
        assert!(density_set(&f, 0.0, 32).is_err());
    }

    #[test]
    fn density_set_is_monotone_in_beta() {
        let g = grid();
        let f = interval(&g, -1.0, 0.2).union(&interval(&g, 0.5, 2.5)).unwrap();
        let mut last = density_set(&f, 0.1, 32).unwrap();
        for beta in [0.3, 0.5, 0.7, 0.9, 1.0] {
            let d = density_set(&f, beta, 32).unwrap();
            assert!(d.is_subset_of(&last).unwrap());
            last = d;
        }
    }

    #[test]
    fn maximal_function_on_indicators() {
        let g = grid();
        let f = interval(&g, -1.0, 0.2).union(&interval(&g, 0.5, 2.5)).unwrap();
        let ind = SpatialFunction::new(g.clone(), f.cells().iter().map(|&c| c as u8 as f64).collect()).unwrap();
        let field = maximal_function_field(&ind, 32);
        let dense = density_set(&f, 0.8, 32).unwrap();
        for x in dense.ones() {
            assert!(field[x] >= 0.8);
            assert!((maximal_function(&ind, &g.center(x), 32) - field[x]).abs() < 1e-12);
        }
        let mut single = vec![0.0; g.cells()];
        single[300] = 1.0;
        let single = SpatialFunction::new(g.clone(), single).unwrap();
        assert_eq!(maximal_function(&single, &g.center(300), 32), 1.0);
        assert!(maximal_function(&single, &g.center(310), 32) > 0.0);
    }

    #[test]
    fn density_averaging_holds_with_measured_constant() {
        let g = grid();
        let f = interval(&g, -1.0, 0.5).union(&interval(&g, 1.0, 3.0)).unwrap();
        let h = TentFunction::from_fn(g, |y, t| (y[0] * 3.0).sin().abs() * t).unwrap();
        let cal = calibrate_eta_bar(1, 0.75, 2000, 7).unwrap();
        assert!(cal.eta_bar > 0.0 && cal.eta_bar < 1.0 && cal.c > 0.0);
        let r = verify_density_averaging(&f, &h, 0.75, cal.eta_bar, 32).unwrap();
        assert!(r.tested > 0 && r.c_prime > 0.0);
        assert!(r.lhs <= r.rhs / r.c_prime * (1.0 + 1e-12));
    }
}
