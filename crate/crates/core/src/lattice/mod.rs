//! Regular dyadic cell lattices over axis boxes.
//!
//! A lattice of level `j` has cells of side `h = 2^{-j}`. Cells carry global
//! integer coordinates `g` (cell `g` is `h (g + [0,1)^n)`); storage is
//! row-major with the last axis contiguous.

mod edt;
mod mask;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{normal, AxisBox};

pub use mask::RegionMask;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    level: i32,
    origin: Vec<i64>,
    dims: Vec<usize>,
}

/// `log2(h)` if `h` is an integral power of two.
pub fn dyadic_level(h: f64) -> Result<i32> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Resolution(format!("cell side must be positive, got {h}")));
    }
    let j = -h.log2().round() as i32;
    if 2f64.powi(-j) != h {
        return Err(Error::Resolution(format!("cell side {h} is not a power of two")));
    }
    Ok(j)
}

impl Lattice {
    pub fn new(level: i32, origin: Vec<i64>, dims: Vec<usize>) -> Result<Self> {
        if origin.len() != dims.len() {
            return Err(Error::DimensionMismatch { expected: origin.len(), got: dims.len() });
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(invalid("lattice needs at least one cell per axis"));
        }
        dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| invalid("lattice too large"))?;
        Ok(Lattice { level, origin, dims })
    }

    /// The lattice of side-`h` cells tiling `window`; the window edges must be
    /// multiples of `h`.
    pub fn covering(window: &AxisBox, h: f64) -> Result<Self> {
        let level = dyadic_level(h)?;
        let mut origin = Vec::with_capacity(window.dim());
        let mut dims = Vec::with_capacity(window.dim());
        for d in 0..window.dim() {
            let a = window.lower[d] / h;
            let b = window.upper[d] / h;
            if a.fract() != 0.0 || b.fract() != 0.0 || !a.is_finite() || !b.is_finite() {
                return Err(Error::Resolution(format!("window axis {d} is not aligned to h = {h}")));
            }
            origin.push(a as i64);
            dims.push((b - a) as usize);
        }
        Lattice::new(level, origin, dims)
    }

    /// `[-r, r)^n` at side `h`.
    pub fn symmetric(n: usize, r: f64, h: f64) -> Result<Self> {
        Lattice::covering(&AxisBox::symmetric(n, r)?, h)
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn h(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn window(&self) -> AxisBox {
        let h = self.h();
        AxisBox {
            lower: self.origin.iter().map(|&g| g as f64 * h).collect(),
            upper: self.origin.iter().zip(&self.dims).map(|(&g, &d)| (g + d as i64) as f64 * h).collect(),
        }
    }

    /// Flat index of the cell with global coordinates `g`.
    pub fn index_of(&self, g: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for d in 0..self.dim() {
            let local = g[d] - self.origin[d];
            if local < 0 || local >= self.dims[d] as i64 {
                return None;
            }
            idx = idx * self.dims[d] + local as usize;
        }
        Some(idx)
    }

    /// Global coordinates of flat cell `i`.
    pub fn coords_of(&self, mut i: usize) -> Vec<i64> {
        let mut g = vec![0i64; self.dim()];
        for d in (0..self.dim()).rev() {
            g[d] = self.origin[d] + (i % self.dims[d]) as i64;
            i /= self.dims[d];
        }
        g
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        let h = self.h();
        self.coords_of(i).into_iter().map(|g| (g as f64 + 0.5) * h).collect()
    }

    pub fn center_into(&self, mut i: usize, out: &mut [f64]) {
        let h = self.h();
        for d in (0..self.dim()).rev() {
            out[d] = ((self.origin[d] + (i % self.dims[d]) as i64) as f64 + 0.5) * h;
            i /= self.dims[d];
        }
    }

    pub fn cell_box(&self, i: usize) -> AxisBox {
        let h = self.h();
        let g = self.coords_of(i);
        AxisBox { lower: g.iter().map(|&v| v as f64 * h).collect(), upper: g.iter().map(|&v| (v + 1) as f64 * h).collect() }
    }

    /// Global coordinates of the cell containing `x` (whether or not it is in the window).
    pub fn global_cell(&self, x: &[f64]) -> Vec<i64> {
        let inv = 2f64.powi(self.level);
        x.iter().map(|&v| (v * inv).floor() as i64).collect()
    }

    /// Flat index of the cell containing `x`, if inside the window.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        self.index_of(&self.global_cell(x))
    }

    /// Centres of all cells, flattened (`len * n` values).
    pub fn centers(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; self.len() * n];
        for (i, chunk) in out.chunks_mut(n).enumerate() {
            self.center_into(i, chunk);
        }
        out
    }

    /// Gaussian measure of every cell as a product of 1D CDF differences.
    pub fn cell_measures(&self) -> Vec<f64> {
        let h = self.h();
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|d| {
                (0..self.dims[d])
                    .map(|k| {
                        let g = (self.origin[d] + k as i64) as f64;
                        normal::interval(g * h, (g + 1.0) * h)
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![1.0; self.len()];
        for (i, w) in out.iter_mut().enumerate() {
            let mut rem = i;
            for d in (0..self.dim()).rev() {
                *w *= axes[d][rem % self.dims[d]];
                rem /= self.dims[d];
            }
        }
        out
    }

    /// The sub-lattice of global cells `lo..hi` (clipped to this window).
    pub fn sub_lattice(&self, lo: &[i64], hi: &[i64]) -> Option<Lattice> {
        let mut origin = Vec::with_capacity(self.dim());
        let mut dims = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let a = lo[d].max(self.origin[d]);
            let b = hi[d].min(self.origin[d] + self.dims[d] as i64);
            if a >= b {
                return None;
            }
            origin.push(a);
            dims.push((b - a) as usize);
        }
        Some(Lattice { level: self.level, origin, dims })
    }

    /// Calls `f(i)` for every cell with global coordinates in `[lo, hi)`
    /// (clipped to the window), in storage order.
    pub fn for_each_in_range(&self, lo: &[i64], hi: &[i64], mut f: impl FnMut(usize)) {
        let Some(sub) = self.sub_lattice(lo, hi) else { return };
        let n = self.dim();
        let last = n - 1;
        let mut g = sub.origin.clone();
        loop {
            let start = self.index_of(&g).expect("sub-lattice cell inside lattice");
            for i in start..start + sub.dims[last] {
                f(i);
            }
            let mut d = last as isize - 1;
            loop {
                if d < 0 {
                    return;
                }
                let du = d as usize;
                g[du] += 1;
                if g[du] < sub.origin[du] + sub.dims[du] as i64 {
                    break;
                }
                g[du] = sub.origin[du];
                d -= 1;
            }
        }
    }

    /// Calls `f(start, len)` for every run of cells along the last axis whose
    /// centres lie in the open ball `B(c, r)`.
    pub fn for_each_ball_row(&self, c: &[f64], r: f64, mut f: impl FnMut(usize, usize)) {
        if r <= 0.0 {
            return;
        }
        let n = self.dim();
        let h = self.h();
        let r2 = r * r;
        let (lo, hi): (Vec<i64>, Vec<i64>) = (0..n)
            .map(|d| {
                let a = (((c[d] - r) / h - 0.5).floor() as i64 + 1).max(self.origin[d]);
                let b = (((c[d] + r) / h - 0.5).ceil() as i64 - 1).min(self.origin[d] + self.dims[d] as i64 - 1);
                (a, b)
            })
            .unzip();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return;
        }
        let mut g = lo.clone();
        loop {
            let mut s = 0.0;
            for d in 0..n - 1 {
                let t = (g[d] as f64 + 0.5) * h - c[d];
                s += t * t;
            }
            if s < r2 {
                let rho = (r2 - s).sqrt();
                let last = n - 1;
                let mut a = ((c[last] - rho) / h - 0.5).floor() as i64 + 1;
                let mut b = ((c[last] + rho) / h - 0.5).ceil() as i64 - 1;
                // Enforce the strict inequality exactly at the ends.
                let inside = |gl: i64| {
                    let t = (gl as f64 + 0.5) * h - c[last];
                    s + t * t < r2
                };
                while a <= b && !inside(a) {
                    a += 1;
                }
                while b >= a && !inside(b) {
                    b -= 1;
                }
                a = a.max(lo[last]);
                b = b.min(hi[last]);
                if a <= b {
                    g[last] = a;
                    let start = self.index_of(&g).expect("row start inside lattice");
                    f(start, (b - a + 1) as usize);
                }
            }
            // advance over all axes but the last
            let mut d = n as isize - 2;
            loop {
                if d < 0 {
                    return;
                }
                let du = d as usize;
                g[du] += 1;
                if g[du] <= hi[du] {
                    break;
                }
                g[du] = lo[du];
                d -= 1;
            }
        }
    }

    /// Flat indices of cells whose centres lie in `B(c, r)`.
    pub fn cells_in_ball(&self, c: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_ball_row(c, r, |s, len| out.extend(s..s + len));
        out
    }
}
