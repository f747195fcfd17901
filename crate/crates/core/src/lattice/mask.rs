use serde::{Deserialize, Serialize};

use super::{edt, Lattice};
use crate::error::{Error, Result};
use crate::geometry::box_distance;

/// A subset of R^n represented by a bitmap of lattice cells plus a flag for
/// the region outside the lattice window.
///
/// Distance fields are measured between cell centres, with the exterior
/// modelled as a one-cell halo around the window. Point queries instead use
/// the exact distance to the union of closed cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMask {
    lattice: Lattice,
    cells: Vec<bool>,
    exterior: bool,
}

impl RegionMask {
    pub fn empty(lattice: Lattice) -> Self {
        let len = lattice.len();
        RegionMask { lattice, cells: vec![false; len], exterior: false }
    }

    /// Every cell of the window (the exterior is not included).
    pub fn full(lattice: Lattice) -> Self {
        let len = lattice.len();
        RegionMask { lattice, cells: vec![true; len], exterior: false }
    }

    pub fn from_cells(lattice: Lattice, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != lattice.len() {
            return Err(Error::DimensionMismatch { expected: lattice.len(), got: cells.len() });
        }
        Ok(RegionMask { lattice, cells, exterior: false })
    }

    pub fn from_indices(lattice: Lattice, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = RegionMask::empty(lattice);
        for i in indices {
            mask.cells[i] = true;
        }
        mask
    }

    /// Cells whose centre satisfies `pred`.
    pub fn from_fn(lattice: Lattice, mut pred: impl FnMut(&[f64]) -> bool) -> Self {
        let n = lattice.dim();
        let mut buf = vec![0.0; n];
        let cells = (0..lattice.len())
            .map(|i| {
                lattice.center_into(i, &mut buf);
                pred(&buf)
            })
            .collect();
        RegionMask { lattice, cells, exterior: false }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn exterior(&self) -> bool {
        self.exterior
    }

    pub fn h(&self) -> f64 {
        self.lattice.h()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// True when no cell is set and the exterior is excluded.
    pub fn is_empty(&self) -> bool {
        !self.exterior && !self.cells.iter().any(|&c| c)
    }

    pub fn contains_cell(&self, i: usize) -> bool {
        self.cells[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.cells[i] = value;
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        match self.lattice.locate(x) {
            Some(i) => self.cells[i],
            None => self.exterior,
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, &c)| c.then_some(i))
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            lattice: self.lattice.clone(),
            cells: self.cells.iter().map(|c| !c).collect(),
            exterior: !self.exterior,
        }
    }

    pub fn with_exterior(mut self, exterior: bool) -> RegionMask {
        self.exterior = exterior;
        self
    }

    fn zip(&self, other: &RegionMask, op: impl Fn(bool, bool) -> bool) -> Result<RegionMask> {
        if self.lattice != other.lattice {
            return Err(Error::GridMismatch);
        }
        Ok(RegionMask {
            lattice: self.lattice.clone(),
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| op(a, b)).collect(),
            exterior: op(self.exterior, other.exterior),
        })
    }

    pub fn union(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> Result<bool> {
        if self.lattice != other.lattice {
            return Err(Error::GridMismatch);
        }
        Ok((!self.exterior || other.exterior) && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b))
    }

    /// Gaussian measure of the window cells, given per-cell weights.
    pub fn weighted_measure(&self, weights: &[f64]) -> f64 {
        self.cells.iter().zip(weights).filter(|(c, _)| **c).map(|(_, w)| w).sum()
    }

    /// `d(centre_i, self)` for every cell, centre to centre.
    pub fn distance_field(&self) -> Vec<f64> {
        let h = self.h();
        if !self.exterior {
            return edt::squared_distance(self.lattice.dims(), &self.cells).into_iter().map(|v| v.sqrt() * h).collect();
        }
        let dims = self.lattice.dims();
        let padded: Vec<usize> = dims.iter().map(|d| d + 2).collect();
        let total: usize = padded.iter().product();
        let mut sites = vec![true; total];
        for (i, &c) in self.cells.iter().enumerate() {
            sites[padded_index(dims, &padded, i)] = c;
        }
        let sq = edt::squared_distance(&padded, &sites);
        (0..self.cells.len()).map(|i| sq[padded_index(dims, &padded, i)].sqrt() * h).collect()
    }

    /// `d(centre_i, complement)` for every cell.
    pub fn complement_distance_field(&self) -> Vec<f64> {
        self.complement().distance_field()
    }

    /// Distance from an arbitrary point to the set (closed cells, plus the
    /// window complement when the exterior is included).
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        if self.contains_point(x) {
            return 0.0;
        }
        let mut best = if self.exterior { self.lattice.window().distance_to_complement(x) } else { f64::INFINITY };
        let h = self.h();
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in self.ones() {
            self.lattice.center_into(i, &mut lo);
            for d in 0..n {
                hi[d] = lo[d] + 0.5 * h;
                lo[d] -= 0.5 * h;
            }
            best = best.min(box_distance(&lo, &hi, x));
        }
        best
    }

    /// Global cell bounds `[lo, hi)` of the set cells.
    pub fn support_bounds(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let n = self.dim();
        let mut lo = vec![i64::MAX; n];
        let mut hi = vec![i64::MIN; n];
        let mut any = false;
        for i in self.ones() {
            any = true;
            let g = self.lattice.coords_of(i);
            for d in 0..n {
                lo[d] = lo[d].min(g[d]);
                hi[d] = hi[d].max(g[d] + 1);
            }
        }
        any.then_some((lo, hi))
    }

    /// The same set on `target`, which must share the cell size. Target cells
    /// outside this window take the exterior flag.
    pub fn resample(&self, target: &Lattice) -> Result<RegionMask> {
        if target.level() != self.lattice.level() || target.dim() != self.dim() {
            return Err(Error::GridMismatch);
        }
        let cells = (0..target.len())
            .map(|i| match self.lattice.index_of(&target.coords_of(i)) {
                Some(j) => self.cells[j],
                None => self.exterior,
            })
            .collect();
        Ok(RegionMask { lattice: target.clone(), cells, exterior: self.exterior })
    }

    /// Restriction to the bounding box of the set cells grown by `margin`
    /// cells (clipped to the window). `None` when no cell is set.
    pub fn crop(&self, margin: i64) -> Option<RegionMask> {
        let (lo, hi) = self.support_bounds()?;
        let lo: Vec<i64> = lo.iter().map(|v| v - margin).collect();
        let hi: Vec<i64> = hi.iter().map(|v| v + margin).collect();
        let sub = self.lattice.sub_lattice(&lo, &hi)?;
        self.resample(&sub).ok()
    }
}

fn padded_index(dims: &[usize], padded: &[usize], mut i: usize) -> usize {
    let n = dims.len();
    let mut coords = [0usize; 8];
    for d in (0..n).rev() {
        coords[d] = i % dims[d] + 1;
        i /= dims[d];
    }
    let mut out = 0usize;
    for d in 0..n {
        out = out * padded[d] + coords[d];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance, AxisBox};

    fn lat1() -> Lattice {
        Lattice::symmetric(1, 4.0, 0.25).unwrap()
    }

    #[test]
    fn complement_is_an_involution() {
        let m = RegionMask::from_fn(lat1(), |x| x[0] > 0.3);
        assert_eq!(m.complement().complement(), m);
        assert!(m.complement().exterior());
        assert!(m.union(&m.complement()).unwrap().cells().iter().all(|&c| c));
    }

    #[test]
    fn distance_fields_against_brute_force() {
        let lat = Lattice::new(2, vec![-6, -3], vec![11, 9]).unwrap();
        let m = RegionMask::from_fn(lat.clone(), |x| (x[0] - 0.3).abs() + x[1].abs() < 0.6);
        let field = m.distance_field();
        for i in 0..lat.len() {
            let want = m.ones().map(|j| distance(&lat.center(i), &lat.center(j))).fold(f64::INFINITY, f64::min);
            assert!((field[i] - want).abs() < 1e-12);
        }
        // Complement distances see the exterior halo one cell outside the window.
        let full = RegionMask::full(lat.clone());
        let to_out = full.complement_distance_field();
        assert_eq!(to_out[0], lat.h());
        let mid = lat.index_of(&[-1, 1]).unwrap();
        assert_eq!(to_out[mid], 5.0 * lat.h());
    }

    #[test]
    fn point_distances() {
        let lat = lat1();
        let a = RegionMask::from_fn(lat, |x| (0.0..1.0).contains(&x[0]));
        assert_eq!(a.distance_to(&[0.5]), 0.0);
        assert!((a.distance_to(&[1.5]) - 0.5).abs() < 1e-15);
        assert!((a.distance_to(&[-2.0]) - 2.0).abs() < 1e-15);
        let c = a.complement();
        assert!((c.distance_to(&[0.25]) - 0.25).abs() < 1e-15);
        assert_eq!(c.distance_to(&[7.0]), 0.0);
    }

    #[test]
    fn crop_keeps_the_set() {
        let lat = Lattice::symmetric(2, 2.0, 0.25).unwrap();
        let m = RegionMask::from_fn(lat, |x| distance(x, &[0.5, -0.5]) < 0.3);
        let c = m.crop(2).unwrap();
        assert_eq!(c.count(), m.count());
        assert!(c.lattice().len() < m.lattice().len());
        let back = c.resample(m.lattice()).unwrap();
        assert_eq!(back, m);
        assert!(RegionMask::empty(m.lattice().clone()).crop(1).is_none());
        let w = c.lattice().window();
        assert!(w.is_subset_of(&AxisBox::symmetric(2, 2.0).unwrap()));
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = RegionMask::empty(lat1());
        let b = RegionMask::empty(Lattice::symmetric(1, 4.0, 0.5).unwrap());
        assert_eq!(a.union(&b), Err(Error::GridMismatch));
    }
}
