use std::sync::Arc;

use rayon::prelude::*;

use super::{DGrid, NormConfig};
use crate::error::{invalid, Error, Result};
use crate::lattice::RegionMask;

/// A function on the active pairs of a [`DGrid`], stored sparsely by active
/// index. Entries are sorted and never exactly zero.
#[derive(Clone, Debug)]
pub struct TentFunction {
    grid: Arc<DGrid>,
    idx: Vec<u32>,
    vals: Vec<f64>,
}

impl PartialEq for TentFunction {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) && self.idx == other.idx && self.vals == other.vals
    }
}

impl TentFunction {
    pub fn zero(grid: Arc<DGrid>) -> Self {
        TentFunction { grid, idx: Vec::new(), vals: Vec::new() }
    }

    /// Builds from `(active index, value)` pairs; duplicates are summed.
    pub fn from_entries(grid: Arc<DGrid>, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut e: Vec<(usize, f64)> = entries.into_iter().collect();
        let len = grid.active_len();
        if let Some(&(a, _)) = e.iter().find(|(a, _)| *a >= len) {
            return Err(invalid(format!("active index {a} out of range {len}")));
        }
        if e.iter().any(|(_, v)| !v.is_finite()) {
            return Err(invalid("tent function values must be finite"));
        }
        e.sort_by_key(|&(a, _)| a);
        let mut idx = Vec::with_capacity(e.len());
        let mut vals: Vec<f64> = Vec::with_capacity(e.len());
        for (a, v) in e {
            if idx.last() == Some(&(a as u32)) {
                *vals.last_mut().unwrap() += v;
            } else {
                idx.push(a as u32);
                vals.push(v);
            }
        }
        let mut f = TentFunction { grid, idx, vals };
        f.prune();
        Ok(f)
    }

    /// Samples `value(y, t)` on every active pair.
    pub fn from_fn(grid: Arc<DGrid>, mut value: impl FnMut(&[f64], f64) -> f64) -> Result<Self> {
        let mut entries = Vec::new();
        let mut y = vec![0.0; grid.dim()];
        for j in 0..grid.cells() {
            let levels = grid.levels_at(j);
            if levels == 0 {
                continue;
            }
            grid.lattice().center_into(j, &mut y);
            for s in 0..levels {
                let v = value(&y, grid.t_levels()[s]);
                if v != 0.0 {
                    entries.push((grid.active_index(j, s).unwrap(), v));
                }
            }
        }
        Self::from_entries(grid, entries)
    }

    fn prune(&mut self) {
        let mut w = 0;
        for r in 0..self.idx.len() {
            if self.vals[r] != 0.0 {
                self.idx[w] = self.idx[r];
                self.vals[w] = self.vals[r];
                w += 1;
            }
        }
        self.idx.truncate(w);
        self.vals.truncate(w);
    }

    pub fn grid(&self) -> &Arc<DGrid> {
        &self.grid
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn is_zero(&self) -> bool {
        self.idx.is_empty()
    }

    /// Nonzero `(active index, value)` pairs in increasing index order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().map(|&a| a as usize).zip(self.vals.iter().copied())
    }

    pub fn get(&self, a: usize) -> f64 {
        match self.idx.binary_search(&(a as u32)) {
            Ok(r) => self.vals[r],
            Err(_) => 0.0,
        }
    }

    pub fn scale(&self, c: f64) -> TentFunction {
        let mut f = TentFunction { grid: self.grid.clone(), idx: self.idx.clone(), vals: self.vals.iter().map(|v| c * v).collect() };
        f.prune();
        f
    }

    /// Keeps the entries for which `keep(j, s, value)` holds.
    pub fn filter(&self, mut keep: impl FnMut(usize, usize, f64) -> bool) -> TentFunction {
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for (a, v) in self.entries() {
            let (j, s) = self.grid.split(a);
            if keep(j, s, v) {
                idx.push(a as u32);
                vals.push(v);
            }
        }
        TentFunction { grid: self.grid.clone(), idx, vals }
    }

    /// Replaces every value by `map(j, s, value)`.
    pub fn map(&self, mut map: impl FnMut(usize, usize, f64) -> f64) -> TentFunction {
        let vals = self
            .entries()
            .map(|(a, v)| {
                let (j, s) = self.grid.split(a);
                map(j, s, v)
            })
            .collect();
        let mut f = TentFunction { grid: self.grid.clone(), idx: self.idx.clone(), vals };
        f.prune();
        f
    }

    fn check_grid(&self, other: &TentFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn add(&self, other: &TentFunction) -> Result<TentFunction> {
        self.check_grid(other)?;
        TentFunction::from_entries(self.grid.clone(), self.entries().chain(other.entries()))
    }

    /// Largest `|self - other|` over active pairs.
    pub fn max_abs_diff(&self, other: &TentFunction) -> Result<f64> {
        self.check_grid(other)?;
        let (mut i, mut k) = (0, 0);
        let mut worst = 0.0f64;
        while i < self.idx.len() || k < other.idx.len() {
            let a = self.idx.get(i).copied().unwrap_or(u32::MAX);
            let b = other.idx.get(k).copied().unwrap_or(u32::MAX);
            let d = if a == b {
                i += 1;
                k += 1;
                self.vals[i - 1] - other.vals[k - 1]
            } else if a < b {
                i += 1;
                self.vals[i - 1]
            } else {
                k += 1;
                other.vals[k - 1]
            };
            worst = worst.max(d.abs());
        }
        Ok(worst)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Spatial cells carrying a nonzero value.
    pub fn support_cells(&self) -> Vec<usize> {
        let mut cells: Vec<usize> = self.entries().map(|(a, _)| self.grid.split(a).0).collect();
        cells.dedup();
        cells
    }
}

/// A function of `x` on the spatial lattice of a [`DGrid`].
#[derive(Clone, Debug)]
pub struct SpatialFunction {
    grid: Arc<DGrid>,
    pub values: Vec<f64>,
}

impl SpatialFunction {
    pub fn new(grid: Arc<DGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::DimensionMismatch { expected: grid.cells(), got: values.len() });
        }
        Ok(SpatialFunction { grid, values })
    }

    pub fn grid(&self) -> &Arc<DGrid> {
        &self.grid
    }

    /// `sum_x g(x) gamma(cell_x)`.
    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(v, w)| v * w).sum()
    }

    /// Cells with `g > threshold`.
    pub fn super_level(&self, threshold: f64) -> RegionMask {
        let cells = self.values.iter().map(|&v| v > threshold).collect();
        RegionMask::from_cells(self.grid.lattice().clone(), cells).expect("sizes agree")
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Smallest strictly positive value.
    pub fn min_positive(&self) -> Option<f64> {
        self.values.iter().copied().filter(|&v| v > 0.0).min_by(f64::total_cmp)
    }
}

/// `sum_x 1_{B(y_j, alpha t_s)}(x) |f|^q gamma_j w / gamma(B(y_j, t_s))`, the
/// `q`-th power of `J_alpha f`. The normaliser is `gamma(B(y, t))` for every
/// aperture.
pub(crate) fn j_power(f: &TentFunction, q: f64, alpha: f64, norm_factor: f64) -> Vec<f64> {
    let grid = f.grid();
    let coefficient = |a: usize, v: f64| {
        let (j, _) = grid.split(a);
        v.abs().powf(q) * grid.mass(j) / grid.ball_scaled(a, norm_factor)
    };
    let entries: Vec<(usize, f64)> = f.entries().collect();
    // Fill the ball cache in parallel before the sequential scatter.
    let coefficients: Vec<f64> = entries.par_iter().map(|&(a, v)| coefficient(a, v)).collect();
    let mut out = vec![0.0; grid.cells()];
    let lattice = grid.lattice();
    for (&(a, _), c) in entries.iter().zip(coefficients) {
        let (j, s) = grid.split(a);
        let y = lattice.center(j);
        lattice.for_each_ball_row(&y, alpha * grid.t_levels()[s], |start, len| {
            for v in &mut out[start..start + len] {
                *v += c;
            }
        });
    }
    out
}

/// `J_alpha f(x) = ||1_{B(y, alpha t)}(x) f(y,t) / gamma(B(y,t))^{1/q}||_{L^q(D)}` on every cell.
pub fn apply_j(f: &TentFunction, cfg: &NormConfig, alpha: f64) -> Result<SpatialFunction> {
    cfg.validate()?;
    if !(alpha > 0.0) {
        return Err(invalid(format!("aperture must be positive, got {alpha}")));
    }
    let inv = 1.0 / cfg.q;
    let values = j_power(f, cfg.q, alpha, 1.0).into_iter().map(|v| v.powf(inv)).collect();
    SpatialFunction::new(f.grid().clone(), values)
}

/// `||J_alpha f||_{L^1(gamma)}`.
pub fn t1q_norm(f: &TentFunction, cfg: &NormConfig, alpha: f64) -> Result<f64> {
    Ok(apply_j(f, cfg, alpha)?.integral())
}

/// `||f||_{L^q(D, dgamma dt/t)}`.
pub fn lq_norm_d(f: &TentFunction, q: f64) -> f64 {
    let grid = f.grid();
    f.entries().map(|(a, v)| v.abs().powf(q) * grid.mass(grid.split(a).0)).sum::<f64>().powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tent::DGridSpec;
    use approx::assert_relative_eq;

    fn grid() -> Arc<DGrid> {
        Arc::new(DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 64.0, t_min: 1.0 / 64.0, t_ratio: 2f64.powf(0.25) }).unwrap())
    }

    #[test]
    fn entries_are_sorted_merged_and_pruned() {
        let g = grid();
        let f = TentFunction::from_entries(g.clone(), [(5, 1.0), (2, 2.0), (5, -1.0), (7, 0.5)]).unwrap();
        assert_eq!(f.entries().collect::<Vec<_>>(), vec![(2, 2.0), (7, 0.5)]);
        assert!(TentFunction::from_entries(g.clone(), [(g.active_len(), 1.0)]).is_err());
        assert!(TentFunction::from_entries(g, [(0, f64::NAN)]).is_err());
    }

    #[test]
    fn single_pair_j_is_an_indicator() {
        let g = grid();
        let j = 256;
        let s = 3;
        let a = g.active_index(j, s).unwrap();
        let f = TentFunction::from_entries(g.clone(), [(a, 2.0)]).unwrap();
        let cfg = NormConfig::new(2.0).unwrap();
        let jf = apply_j(&f, &cfg, 1.0).unwrap();
        let expected = (4.0 * g.mass(j) / g.ball(a)).sqrt();
        let y = g.center(j);
        let t = g.t_levels()[s];
        for (x, v) in jf.values.iter().enumerate() {
            let inside = (g.center(x)[0] - y[0]).abs() < t;
            assert_eq!(*v, if inside { expected } else { 0.0 });
        }
    }

    #[test]
    fn norms_are_homogeneous_and_monotone_in_aperture() {
        let g = grid();
        let f = TentFunction::from_fn(g, |y, t| (1.0 - y[0].abs()).max(0.0) * t).unwrap();
        let cfg = NormConfig::new(1.5).unwrap();
        let n1 = t1q_norm(&f, &cfg, 1.0).unwrap();
        let n2 = t1q_norm(&f.scale(-3.0), &cfg, 1.0).unwrap();
        assert_relative_eq!(n2, 3.0 * n1, max_relative = 1e-12);
        assert!(t1q_norm(&f, &cfg, 2.0).unwrap() >= n1);
        assert_relative_eq!(lq_norm_d(&f.scale(2.0), 1.5), 2.0 * lq_norm_d(&f, 1.5), max_relative = 1e-12);
    }

    #[test]
    fn max_abs_diff_merges_supports() {
        let g = grid();
        let f = TentFunction::from_entries(g.clone(), [(1, 1.0), (4, 2.0)]).unwrap();
        let h = TentFunction::from_entries(g, [(4, 1.5), (9, -3.0)]).unwrap();
        assert_eq!(f.max_abs_diff(&h).unwrap(), 3.0);
        assert_eq!(f.add(&h.scale(-1.0)).unwrap().max_abs(), 3.0);
    }
}
