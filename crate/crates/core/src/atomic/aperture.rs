use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tent::{j_power, t1q_norm, DGrid, NormConfig, TentFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApertureReport {
    pub alpha0: f64,
    pub alpha: f64,
    pub norm_alpha0: f64,
    pub norm_alpha: f64,
    /// `norm_alpha / norm_alpha0`.
    pub ratio: f64,
    /// `||J f~||` for `f~(y, t) = f(y, t / alpha)` on the dilated domain.
    pub majorant: f64,
    /// `(max gamma(B(y, alpha t)) / gamma(B(y, t)))^{1/q}` over `supp f`.
    pub doubling: f64,
}

/// `(max gamma(B(y, alpha t)) / gamma(B(y, t)))^{1/q}` over every active pair
/// of the grid.
pub fn grid_doubling_constant(grid: &DGrid, alpha: f64, q: f64) -> f64 {
    (0..grid.active_len())
        .into_par_iter()
        .map(|a| grid.ball_scaled(a, alpha) / grid.ball(a))
        .reduce(|| 1.0, f64::max)
        .powf(1.0 / q)
}

pub fn aperture_compare(f: &TentFunction, alpha0: f64, alpha: f64, cfg: &NormConfig) -> Result<ApertureReport> {
    cfg.validate()?;
    if !(alpha0 > 0.0 && alpha >= alpha0) {
        return Err(invalid(format!("need 0 < alpha0 <= alpha, got {alpha0} and {alpha}")));
    }
    let norm_alpha0 = t1q_norm(f, cfg, alpha0)?;
    let norm_alpha = t1q_norm(f, cfg, alpha)?;
    let grid = f.grid();
    let inv = 1.0 / cfg.q;
    let majorant = j_power(f, cfg.q, alpha, alpha).iter().zip(grid.weights()).map(|(v, w)| v.powf(inv) * w).sum();
    let doubling = f
        .entries()
        .map(|(a, _)| grid.ball_scaled(a, alpha) / grid.ball(a))
        .fold(1.0, f64::max)
        .powf(inv);
    let ratio = if norm_alpha0 > 0.0 { norm_alpha / norm_alpha0 } else { 1.0 };
    Ok(ApertureReport { alpha0, alpha, norm_alpha0, norm_alpha, ratio, majorant, doubling })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tent::DGridSpec;
    use std::sync::Arc;

    #[test]
    fn aperture_ratio_and_majorant() {
        let g = Arc::new(DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 64.0, t_min: 1.0 / 64.0, t_ratio: 2f64.powf(0.25) }).unwrap());
        let f = TentFunction::from_fn(g.clone(), |y, t| if y[0].abs() < 1.0 { (2.0 * y[0]).cos() * t } else { 0.0 }).unwrap();
        let cfg = NormConfig::new(2.0).unwrap();
        let same = aperture_compare(&f, 1.5, 1.5, &cfg).unwrap();
        assert_eq!(same.ratio, 1.0);
        let r = aperture_compare(&f, 1.5, 3.0, &cfg).unwrap();
        assert!(r.ratio >= 1.0);
        assert!(r.norm_alpha <= r.doubling * r.majorant * (1.0 + 1e-12));
        assert!(r.doubling <= grid_doubling_constant(&g, 3.0, 2.0));
        assert!(aperture_compare(&f, 3.0, 1.5, &cfg).is_err());
    }
}
