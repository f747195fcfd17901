//! Discretised tent spaces over `D = {(y,t): t < m(y)}`.

mod atom;
mod density;
mod function;
mod grid;

use serde::{Deserialize, Serialize};

pub use atom::{holder_chain, make_atom, verify_atom_norm, AtomRecord, HolderChain};
pub use density::{
    calibrate_eta_bar, density_set, maximal_function, maximal_function_field, radius_mesh, verify_density_averaging,
    DensityAveraging, EtaBarCalibration, DEFAULT_RADII,
};
pub use function::{apply_j, lq_norm_d, t1q_norm, SpatialFunction, TentFunction};
pub use grid::{DGrid, DGridSpec};

pub(crate) use function::j_power;

use crate::error::{invalid, Result};
use crate::lattice::RegionMask;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    pub q: f64,
    /// Absolute tolerance for ball measures where one is requested.
    pub ball_tol: f64,
}

impl NormConfig {
    pub fn new(q: f64) -> Result<Self> {
        let cfg = NormConfig { q, ball_tol: 1e-10 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(invalid(format!("q must lie in (1, inf), got {}", self.q)));
        }
        if !(self.ball_tol > 0.0) {
            return Err(invalid("ball tolerance must be positive"));
        }
        Ok(())
    }

    /// Conjugate exponent `q / (q - 1)`.
    pub fn q_conj(&self) -> f64 {
        self.q / (self.q - 1.0)
    }
}

/// `(y,t)` lies in the tent `T_alpha(A)`: `d(y, complement A) >= alpha t`.
pub fn tent_contains(a: &RegionMask, alpha: f64, y: &[f64], t: f64) -> bool {
    a.complement().distance_to(y) >= alpha * t
}

/// `(y,t)` lies in the region `R_alpha(A)`: `d(y, A) < alpha t`.
pub fn region_contains(a: &RegionMask, alpha: f64, y: &[f64], t: f64) -> bool {
    a.distance_to(y) < alpha * t
}

/// Per spatial cell, the number of leading levels in `T_alpha(A)`, using the
/// centre-to-centre distance to the complement of `A`.
pub fn tent_levels(grid: &DGrid, a: &RegionMask, alpha: f64) -> Vec<usize> {
    let field = a.complement_distance_field();
    (0..grid.cells())
        .map(|j| grid.t_levels()[..grid.levels_at(j)].partition_point(|&t| alpha * t <= field[j]))
        .collect()
}

/// Per spatial cell, the first level in `R_alpha(A)`; levels from there up lie
/// in the region.
pub fn region_start(grid: &DGrid, a: &RegionMask, alpha: f64) -> Vec<usize> {
    let field = a.distance_field();
    (0..grid.cells()).map(|j| grid.t_levels().partition_point(|&t| alpha * t <= field[j])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use proptest::prelude::*;

    fn ball_mask() -> RegionMask {
        let lat = Lattice::symmetric(1, 4.0, 1.0 / 64.0).unwrap();
        RegionMask::from_fn(lat, |x| x[0].abs() < 1.0)
    }

    #[test]
    fn tent_examples() {
        let a = ball_mask();
        assert!(tent_contains(&a, 1.0, &[0.0], 0.5));
        assert!(!tent_contains(&a, 1.0, &[0.9], 0.5));
        assert!(region_contains(&a, 1.0, &[0.5], 1e-9));
    }

    #[test]
    fn norm_config_rejects_bad_exponents() {
        assert!(NormConfig::new(1.0).is_err());
        assert!(NormConfig::new(f64::INFINITY).is_err());
        let cfg = NormConfig::new(3.0).unwrap();
        assert!((1.0 / cfg.q + 1.0 / cfg.q_conj() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn level_helpers_are_complementary() {
        let a = ball_mask();
        let grid = DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 64.0, t_min: 1.0 / 64.0, t_ratio: 2f64.sqrt() }).unwrap();
        let tents = tent_levels(&grid, &a.complement(), 0.5);
        let regions = region_start(&grid, &a, 0.5);
        for j in 0..grid.cells() {
            assert_eq!(tents[j], regions[j].min(grid.levels_at(j)));
        }
    }

    proptest! {
        #[test]
        fn region_is_complement_of_tent(
            y in -4.5f64..4.5, t in 0.001f64..2.0, alpha in 0.1f64..4.0,
            lo in -3.0f64..0.0, len in 0.0f64..3.0,
        ) {
            let lat = Lattice::symmetric(1, 4.0, 1.0 / 32.0).unwrap();
            let a = RegionMask::from_fn(lat, |x| x[0] > lo && x[0] < lo + len);
            prop_assert_eq!(region_contains(&a, alpha, &[y], t), !tent_contains(&a.complement(), alpha, &[y], t));
            prop_assert_eq!(tent_contains(&a, 2.0 * alpha, &[y], t), tent_contains(&a, alpha, &[y], 2.0 * t));
        }
    }
}
