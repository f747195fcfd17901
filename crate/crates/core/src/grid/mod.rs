//! Layers `L_l` and the Gaussian dyadic cubes `Delta_{k,l}`.
//!
//! `L_0 = [-1,1)^n` and `L_l = [-2^l,2^l)^n \ [-2^{l-1},2^{l-1})^n`. A cube of
//! `Delta_{k,l}` is a half-open dyadic cube of side `2^{-k-l}` contained in
//! `L_l`, stored by its integer index in units of its own side.

mod label;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{admissibility_radius, norm, AxisBox};

pub use label::{label_of, label_parent, min_label_layer, CubeLabel, LabelClass};

/// Index `l` of the layer containing `x`.
pub fn layer_of(x: &[f64]) -> u32 {
    x.iter().map(|&v| coordinate_layer(v)).max().unwrap_or(0)
}

/// Smallest `l` with `-2^l <= v < 2^l`.
fn coordinate_layer(v: f64) -> u32 {
    let mut l = 0u32;
    let mut edge = 1.0f64;
    while !(-edge <= v && v < edge) {
        l += 1;
        edge *= 2.0;
        if l > 1100 {
            break;
        }
    }
    l
}

/// `2^e` for any integer exponent in range.
pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Whether `Delta_{k,l}` has any cubes.
pub fn family_nonempty(k: i32, l: u32) -> bool {
    if l == 0 {
        k >= 0
    } else {
        k >= 1 - 2 * l as i32
    }
}

/// Closed-form `#Delta_{k,l}`: `(2M)^n - M^n` with `M = 2^{2l+k}` for `l >= 1`,
/// and `2^{kn} 2^n` for `l = 0`. `None` on overflow.
pub fn layer_cube_count(n: usize, k: i32, l: u32) -> Option<u128> {
    if !family_nonempty(k, l) {
        return Some(0);
    }
    let e = 2 * l as i32 + k;
    let outer = 1u128.checked_shl(((e + 1) as u32).checked_mul(n as u32)?)?;
    if l == 0 {
        return Some(outer);
    }
    let inner = 1u128.checked_shl((e as u32).checked_mul(n as u32)?)?;
    Some(outer - inner)
}

/// A cube of `Delta_{k,l}`: `2^{-k-l} (index + [0,1)^n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GaussianCube {
    pub k: i32,
    pub l: u32,
    pub index: Vec<i64>,
}

impl GaussianCube {
    /// Validates that the cube lies in its layer.
    pub fn new(k: i32, l: u32, index: Vec<i64>) -> Result<Self> {
        if !family_nonempty(k, l) {
            return Err(Error::EmptyFamily { k, l });
        }
        if index.is_empty() {
            return Err(invalid("cube index needs at least one axis"));
        }
        let (outer, inner) = layer_bounds(k, l);
        if !in_layer(&index, outer, inner) {
            return Err(invalid(format!("index {index:?} is not in Delta_({k},{l})")));
        }
        Ok(GaussianCube { k, l, index })
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// Dyadic level `k + l`; the side is `2^{-level}`.
    pub fn level(&self) -> i32 {
        self.k + self.l as i32
    }

    pub fn side(&self) -> f64 {
        pow2(-self.level())
    }

    pub fn diameter(&self) -> f64 {
        self.side() * (self.dim() as f64).sqrt()
    }

    pub fn lower(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&i| i as f64 * s).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&i| (i + 1) as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&i| (i as f64 + 0.5) * s).collect()
    }

    pub fn to_box(&self) -> AxisBox {
        AxisBox { lower: self.lower(), upper: self.upper() }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let s = self.side();
        self.index.iter().zip(x).all(|(&i, &v)| (v / s).floor() == i as f64)
    }

    /// Scale of the circumscribed ball `B(center, diam/2)` relative to `m(center)`.
    pub fn circumscribed_scale(&self) -> f64 {
        0.5 * self.diameter() / admissibility_radius(&self.center())
    }

    /// The enclosing cube of `Delta_{k-1,l}`, if that family is nonempty.
    pub fn parent(&self) -> Option<GaussianCube> {
        if !family_nonempty(self.k - 1, self.l) {
            return None;
        }
        Some(GaussianCube { k: self.k - 1, l: self.l, index: self.index.iter().map(|i| i.div_euclid(2)).collect() })
    }

    /// The `2^n` cubes of `Delta_{k+1,l}` inside this one, lexicographically.
    pub fn children(&self) -> Vec<GaussianCube> {
        let n = self.dim();
        (0..1usize << n)
            .map(|bits| GaussianCube {
                k: self.k + 1,
                l: self.l,
                index: (0..n).map(|d| 2 * self.index[d] + ((bits >> (n - 1 - d)) & 1) as i64).collect(),
            })
            .collect()
    }
}

/// Index ranges of `Delta_{k,l}`: the outer box `[-M, M)` and, for `l >= 1`,
/// the excluded inner box `[-M/2, M/2)`, with `M = 2^{2l+k}`.
fn layer_bounds(k: i32, l: u32) -> (i64, Option<i64>) {
    let m = 1i64 << (2 * l as i32 + k);
    if l == 0 {
        (m, None)
    } else {
        (m, Some(m / 2))
    }
}

fn in_layer(index: &[i64], outer: i64, inner: Option<i64>) -> bool {
    let inside_outer = index.iter().all(|&i| -outer <= i && i < outer);
    let inside_inner = inner.is_some_and(|h| index.iter().all(|&i| -h <= i && i < h));
    inside_outer && !inside_inner
}

/// The cube of `Delta_{k, layer_of(x)}` containing `x`.
pub fn cube_of(x: &[f64], k: i32) -> Result<GaussianCube> {
    if x.is_empty() {
        return Err(invalid("empty point"));
    }
    let l = layer_of(x);
    if !family_nonempty(k, l) {
        return Err(Error::EmptyFamily { k, l });
    }
    let scale = pow2(k + l as i32);
    Ok(GaussianCube { k, l, index: x.iter().map(|&v| (v * scale).floor() as i64).collect() })
}

/// Lexicographic enumeration of `Delta_{k,l}` in dimension `n`.
pub fn cubes_in_layer(n: usize, k: i32, l: u32) -> CubeIter {
    CubeIter::new(n, k, l, None)
}

/// Cubes of `Delta_{k,l}` meeting `window`, lexicographically.
pub fn cubes_in_layer_within(k: i32, l: u32, window: &AxisBox) -> CubeIter {
    CubeIter::new(window.dim(), k, l, Some(window))
}

/// Layers `0..=l_max` that meet `window`.
pub fn layers_meeting(window: &AxisBox) -> std::ops::RangeInclusive<u32> {
    let reach = window.lower.iter().chain(&window.upper).fold(0.0f64, |a, v| a.max(v.abs()));
    0..=coordinate_layer(reach)
}

/// Lazy lexicographic cube enumeration over a box of indices with the
/// layer's inner hole skipped.
#[derive(Clone, Debug)]
pub struct CubeIter {
    k: i32,
    l: u32,
    lo: Vec<i64>,
    hi: Vec<i64>,
    inner: Option<i64>,
    cur: Option<Vec<i64>>,
}

impl CubeIter {
    fn new(n: usize, k: i32, l: u32, window: Option<&AxisBox>) -> Self {
        let empty = CubeIter { k, l, lo: vec![], hi: vec![], inner: None, cur: None };
        if !family_nonempty(k, l) || n == 0 {
            return empty;
        }
        let (outer, inner) = layer_bounds(k, l);
        let mut lo = vec![-outer; n];
        let mut hi = vec![outer; n];
        if let Some(w) = window {
            let scale = pow2(k + l as i32);
            for d in 0..n {
                let a = (w.lower[d] * scale).floor();
                let b = (w.upper[d] * scale).ceil();
                lo[d] = lo[d].max(a.max(-outer as f64) as i64);
                hi[d] = hi[d].min(b.min(outer as f64) as i64);
            }
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return empty;
        }
        let mut it = CubeIter { k, l, cur: Some(lo.clone()), lo, hi, inner };
        it.skip_hole();
        it
    }

    /// If the current index is in the hole, jump along the last axis past it.
    fn skip_hole(&mut self) {
        let Some(h) = self.inner else { return };
        loop {
            let Some(cur) = self.cur.as_mut() else { return };
            let n = cur.len();
            let head_inside = cur[..n - 1].iter().all(|&i| -h <= i && i < h);
            if head_inside && -h <= cur[n - 1] && cur[n - 1] < h {
                cur[n - 1] = h;
                if cur[n - 1] >= self.hi[n - 1] {
                    self.advance_head();
                    continue;
                }
            }
            return;
        }
    }

    /// Moves to the start of the next row (all axes but the last).
    fn advance_head(&mut self) {
        let Some(cur) = self.cur.as_mut() else { return };
        let n = cur.len();
        cur[n - 1] = self.lo[n - 1];
        for d in (0..n - 1).rev() {
            cur[d] += 1;
            if cur[d] < self.hi[d] {
                return;
            }
            cur[d] = self.lo[d];
        }
        self.cur = None;
    }

    fn step(&mut self) {
        let Some(cur) = self.cur.as_mut() else { return };
        let n = cur.len();
        cur[n - 1] += 1;
        if cur[n - 1] >= self.hi[n - 1] {
            self.advance_head();
        }
        self.skip_hole();
    }
}

impl Iterator for CubeIter {
    type Item = GaussianCube;

    fn next(&mut self) -> Option<GaussianCube> {
        let index = self.cur.clone()?;
        self.step();
        Some(GaussianCube { k: self.k, l: self.l, index })
    }
}

/// Euclidean norm of the centre of `q`; at least `2^{l-1}` for `l >= 1`.
pub fn center_norm(q: &GaussianCube) -> f64 {
    norm(&q.center())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_examples() {
        assert_eq!(layer_of(&[0.5, 0.5]), 0);
        assert_eq!(layer_of(&[1.0, 0.0]), 1);
        assert_eq!(layer_of(&[3.0, 0.0]), 2);
        assert_eq!(layer_of(&[-1.0]), 0);
        assert_eq!(layer_of(&[-1.0001]), 1);
        assert_eq!(layer_of(&[-2.0]), 1);
        assert_eq!(layer_of(&[2.0]), 2);
    }

    #[test]
    fn layer_counts() {
        assert_eq!(cubes_in_layer(2, 0, 0).count(), 4);
        assert!(cubes_in_layer(2, 0, 0).all(|q| q.side() == 1.0));
        let l1: Vec<_> = cubes_in_layer(1, 0, 1).collect();
        assert_eq!(l1.len(), 4);
        assert!(l1.iter().all(|q| q.side() == 0.5));
        assert_eq!(l1.iter().map(|q| q.index[0]).collect::<Vec<_>>(), vec![-4, -3, 2, 3]);
        assert_eq!(cubes_in_layer(1, -2, 1).count(), 0);
        for l in 0..=4 {
            for n in 1..=2 {
                assert_eq!(cubes_in_layer(n, 0, l).count() as u128, layer_cube_count(n, 0, l).unwrap());
            }
        }
        assert_eq!(layer_cube_count(2, 0, 3), Some(12288));
        assert_eq!(layer_cube_count(1, -2, 1), Some(0));
    }

    #[test]
    fn cube_of_examples() {
        let q = cube_of(&[0.5], 0).unwrap();
        assert_eq!((q.l, q.lower(), q.upper()), (0, vec![0.0], vec![1.0]));
        let q = cube_of(&[1.3], 0).unwrap();
        assert_eq!((q.l, q.lower(), q.upper()), (1, vec![1.0], vec![1.5]));
        assert!(cubes_in_layer(1, 0, 1).any(|c| c == q));
        assert!(matches!(cube_of(&[0.5], -1), Err(Error::EmptyFamily { .. })));
        assert!(cube_of(&[3.0], -3).is_ok());
        assert!(cube_of(&[3.0], -4).is_err());
    }

    #[test]
    fn centre_norms_grow_with_layer() {
        for l in 1..=5 {
            for q in cubes_in_layer(2, 0, l) {
                assert!(center_norm(&q) >= pow2(l as i32 - 1));
            }
        }
    }

    #[test]
    fn windowed_enumeration_matches_filter() {
        let w = AxisBox::new(vec![-3.3, 0.7], vec![2.2, 5.1]).unwrap();
        for l in 0..=4 {
            let fast: Vec<_> = cubes_in_layer_within(0, l, &w).collect();
            let slow: Vec<_> = cubes_in_layer(2, 0, l).filter(|q| q.to_box().intersects(&w)).collect();
            assert_eq!(fast, slow, "layer {l}");
        }
    }

    #[test]
    fn parent_children_roundtrip() {
        let q = GaussianCube::new(0, 2, vec![9, -7]).unwrap();
        for c in q.children() {
            assert_eq!(c.parent().unwrap(), q);
            assert!(q.to_box().contains(&c.center()));
        }
        assert!(GaussianCube::new(0, 2, vec![0, 0]).is_err());
        assert_eq!(GaussianCube::new(0, 0, vec![0]).unwrap().parent(), None);
    }
}
