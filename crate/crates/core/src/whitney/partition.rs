use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grid_slack, whitney_check};
use crate::error::{invalid, Error, Result};
use crate::geometry::AxisBox;
use crate::grid::{cubes_in_layer_within, layers_meeting, GaussianCube};
use crate::lattice::{Lattice, RegionMask};

/// Side ratio between the support of a bump and its cube.
pub const BUMP_EXPANSION: f64 = 9.0 / 8.0;

/// Tensor-product bump: 1 on the cube, a cubic smoothstep down to 0 at
/// `BUMP_EXPANSION` times the half side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub half_side: f64,
    pub support: AxisBox,
}

impl Bump {
    fn for_cube(q: &GaussianCube) -> Self {
        let support = q.to_box().dilate(BUMP_EXPANSION);
        Bump { center: q.center(), half_side: 0.5 * q.side(), support }
    }

    /// Unnormalised profile value.
    pub fn raw(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for (c, xi) in self.center.iter().zip(x) {
            let u = (xi - c).abs() / self.half_side;
            if u >= BUMP_EXPANSION {
                return 0.0;
            }
            if u > 1.0 {
                let t = (BUMP_EXPANSION - u) / (BUMP_EXPANSION - 1.0);
                v *= t * t * (3.0 - 2.0 * t);
            }
        }
        v
    }
}

/// Disjoint Gaussian dyadic cubes filling an open set, with a subordinate
/// partition of unity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WhitneyPartition {
    pub lambda: f64,
    pub cubes: Vec<GaussianCube>,
    pub bumps: Vec<Bump>,
    /// Lattice distance from each cube to the complement of the set.
    pub distances: Vec<f64>,
    /// Realised constant: the largest of `d(Q, complement)/diam(Q)`, the bump
    /// expansion and `1 / min_Q phi`.
    pub rho: f64,
    /// Single cells kept although `diam > d(Q, complement)`; they satisfy the
    /// lower bound only up to the grid slack.
    pub fallback: usize,
    lattice: Lattice,
    #[serde(skip)]
    offsets: Vec<u32>,
    #[serde(skip)]
    candidates: Vec<u32>,
}

/// Outcome of checking the five partition properties against a given `rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub rho: f64,
    pub cubes: usize,
    /// Cells claimed by more than one cube.
    pub overlaps: usize,
    /// Cells of the set not covered, plus covered cells outside the set.
    pub coverage_errors: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub support_violations: usize,
    pub bound_violations: usize,
    pub max_sum_error: f64,
    pub samples: usize,
}

impl PartitionCheck {
    pub fn passed(&self, sum_tol: f64) -> bool {
        self.overlaps == 0
            && self.coverage_errors == 0
            && self.lower_violations == 0
            && self.upper_violations == 0
            && self.support_violations == 0
            && self.bound_violations == 0
            && self.max_sum_error <= sum_tol
    }
}

fn cell_range(b: &AxisBox, h: f64) -> (Vec<i64>, Vec<i64>) {
    (
        b.lower.iter().map(|v| (v / h).floor() as i64).collect(),
        b.upper.iter().map(|v| (v / h).ceil() as i64).collect(),
    )
}

struct Selector<'a> {
    o: &'a RegionMask,
    field: Vec<f64>,
    cubes: Vec<GaussianCube>,
    distances: Vec<f64>,
    fallback: usize,
}

impl Selector<'_> {
    fn visit(&mut self, q: GaussianCube) {
        let lat = self.o.lattice();
        let h = lat.h();
        let (lo, hi) = cell_range(&q.to_box(), h);
        let cells_per_side = (q.side() / h).round() as usize;
        let total = cells_per_side.pow(lat.dim() as u32);
        let mut inside = 0usize;
        let mut dmin = f64::INFINITY;
        lat.for_each_in_range(&lo, &hi, |i| {
            if self.o.contains_cell(i) {
                inside += 1;
                dmin = dmin.min(self.field[i]);
            }
        });
        if inside == 0 {
            return;
        }
        let full = inside == total;
        if full && q.diameter() <= dmin {
            self.cubes.push(q);
            self.distances.push(dmin);
        } else if cells_per_side <= 1 {
            self.fallback += 1;
            self.cubes.push(q);
            self.distances.push(dmin);
        } else {
            for c in q.children() {
                self.visit(c);
            }
        }
    }
}

/// Whitney partition of an open `lambda`-admissible Whitney set given as a mask.
///
/// Cubes are the maximal `Q` in the Gaussian dyadic system (every `k`
/// allowed by the layer) lying in `O` with `diam(Q) <= d(Q, complement O)`,
/// distances measured between cell centres; single cells are the last resort.
pub fn whitney_partition(o: &RegionMask, lambda: f64) -> Result<WhitneyPartition> {
    if o.exterior() {
        return Err(invalid("the set must be bounded (exterior excluded)"));
    }
    if o.count() == 0 {
        return Err(invalid("the set is empty"));
    }
    let cert = whitney_check(o, lambda);
    if !cert.passed() {
        return Err(Error::NotWhitney { lambda, violations: cert.violations });
    }
    let lat = o.lattice().clone();
    if lat.h() > 0.5 {
        return Err(Error::Resolution("partitions need h <= 1/2 to resolve layer boundaries".into()));
    }
    let mut sel = Selector { o, field: o.complement_distance_field(), cubes: vec![], distances: vec![], fallback: 0 };
    let window = lat.window();
    for l in layers_meeting(&window) {
        let k_top = if l == 0 { 0 } else { 1 - 2 * l as i32 };
        for q in cubes_in_layer_within(k_top, l, &window) {
            sel.visit(q);
        }
    }
    let Selector { cubes, distances, fallback, .. } = sel;
    let bumps: Vec<Bump> = cubes.iter().map(Bump::for_cube).collect();

    let h = lat.h();
    let mut counts = vec![0u32; lat.len() + 1];
    for b in &bumps {
        let (lo, hi) = cell_range(&b.support, h);
        lat.for_each_in_range(&lo, &hi, |i| counts[i + 1] += 1);
    }
    for i in 0..lat.len() {
        counts[i + 1] += counts[i];
    }
    let mut fill = counts.clone();
    let mut candidates = vec![0u32; counts[lat.len()] as usize];
    for (m, b) in bumps.iter().enumerate() {
        let (lo, hi) = cell_range(&b.support, h);
        lat.for_each_in_range(&lo, &hi, |i| {
            candidates[fill[i] as usize] = m as u32;
            fill[i] += 1;
        });
    }
    let mut part = WhitneyPartition {
        lambda,
        cubes,
        bumps,
        distances,
        rho: 0.0,
        fallback,
        lattice: lat,
        offsets: counts,
        candidates,
    };
    part.rho = part.realized_rho();
    Ok(part)
}

impl WhitneyPartition {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    fn candidates_at(&self, x: &[f64]) -> &[u32] {
        match self.lattice.locate(x) {
            Some(i) => &self.candidates[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            None => &[],
        }
    }

    /// All nonzero `(m, phi_m(x))`.
    pub fn phis(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let raw: Vec<(usize, f64)> = self
            .candidates_at(x)
            .iter()
            .map(|&m| (m as usize, self.bumps[m as usize].raw(x)))
            .filter(|(_, v)| *v > 0.0)
            .collect();
        let total: f64 = raw.iter().map(|(_, v)| v).sum();
        if total == 0.0 {
            return vec![];
        }
        raw.into_iter().map(|(m, v)| (m, v / total)).collect()
    }

    pub fn phi(&self, m: usize, x: &[f64]) -> f64 {
        self.phis(x).into_iter().find(|(j, _)| *j == m).map_or(0.0, |(_, v)| v)
    }

    /// Lattice cells inside cube `m`.
    pub fn cube_cells(&self, m: usize) -> Vec<usize> {
        let (lo, hi) = cell_range(&self.cubes[m].to_box(), self.lattice.h());
        let mut out = Vec::new();
        self.lattice.for_each_in_range(&lo, &hi, |i| out.push(i));
        out
    }

    fn realized_rho(&self) -> f64 {
        let mut rho = BUMP_EXPANSION;
        let mut buf = vec![0.0; self.lattice.dim()];
        for (m, q) in self.cubes.iter().enumerate() {
            rho = rho.max(self.distances[m] / q.diameter());
            for i in self.cube_cells(m) {
                self.lattice.center_into(i, &mut buf);
                let v = self.phi(m, &buf);
                if v > 0.0 {
                    rho = rho.max(1.0 / v);
                }
            }
        }
        rho
    }

    /// Checks properties (i)-(v) against `rho`: disjointness and exact cover of
    /// `o`, `diam <= d <= rho diam` with grid slack, bump supports inside the
    /// `rho`-dilates, `1/rho <= phi_m <= 1` on `Q_m`, and `sum phi = 1` at
    /// `samples` random points of `o`.
    pub fn check(&self, o: &RegionMask, rho: f64, samples: usize, seed: u64) -> PartitionCheck {
        let lat = &self.lattice;
        let slack = grid_slack(lat.h(), lat.dim());
        let mut owner = vec![u32::MAX; lat.len()];
        let mut report = PartitionCheck {
            rho,
            cubes: self.cubes.len(),
            overlaps: 0,
            coverage_errors: 0,
            lower_violations: 0,
            upper_violations: 0,
            support_violations: 0,
            bound_violations: 0,
            max_sum_error: 0.0,
            samples,
        };
        let mut buf = vec![0.0; lat.dim()];
        for (m, q) in self.cubes.iter().enumerate() {
            for i in self.cube_cells(m) {
                if owner[i] != u32::MAX {
                    report.overlaps += 1;
                }
                owner[i] = m as u32;
                lat.center_into(i, &mut buf);
                let v = self.phi(m, &buf);
                if v > 1.0 + 1e-12 || v * rho < 1.0 - 1e-12 {
                    report.bound_violations += 1;
                }
            }
            let d = self.distances[m];
            if q.diameter() > d + slack {
                report.lower_violations += 1;
            }
            if d > rho * q.diameter() + slack {
                report.upper_violations += 1;
            }
            if !self.bumps[m].support.is_subset_of(&q.to_box().dilate(rho)) {
                report.support_violations += 1;
            }
        }
        report.coverage_errors = (0..lat.len()).filter(|&i| (owner[i] != u32::MAX) != o.contains_cell(i)).count();

        let cells: Vec<usize> = o.ones().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = lat.h();
        for _ in 0..samples {
            if cells.is_empty() {
                break;
            }
            let i = cells[rng.random_range(0..cells.len())];
            let g = lat.coords_of(i);
            let x: Vec<f64> = g.iter().map(|&c| (c as f64 + rng.random::<f64>()) * h).collect();
            let sum: f64 = self.phis(&x).iter().map(|(_, v)| v).sum();
            report.max_sum_error = report.max_sum_error.max((sum - 1.0).abs());
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;

    #[test]
    fn single_cube_is_partitioned_by_descendants() {
        let lat = Lattice::symmetric(2, 2.0, 1.0 / 64.0).unwrap();
        let q = GaussianCube::new(2, 0, vec![1, 2]).unwrap();
        let o = RegionMask::from_fn(lat, |x| q.contains(x));
        let part = whitney_partition(&o, 1.0).unwrap();
        assert!(part.cubes.iter().all(|c| q.to_box().contains(&c.center()) && c.k >= 2));
        let check = part.check(&o, part.rho, 10_000, 1);
        assert!(check.passed(1e-9), "{check:?}");
    }

    #[test]
    fn disk_partition_properties() {
        let lat = Lattice::symmetric(2, 3.0, 1.0 / 32.0).unwrap();
        let o = RegionMask::from_fn(lat, |x| distance(x, &[1.2, -0.4]) < 1.1);
        let part = whitney_partition(&o, 8.0).unwrap();
        let check = part.check(&o, part.rho, 10_000, 2);
        assert!(check.passed(1e-9), "{check:?}");
        assert!(part.rho < 16.0, "rho = {}", part.rho);
        assert!(part.cubes.iter().any(|c| c.level() < 5));
    }

    #[test]
    fn rejects_non_whitney_sets() {
        let lat = Lattice::symmetric(1, 4.0, 1.0 / 16.0).unwrap();
        let o = RegionMask::full(lat);
        assert!(matches!(whitney_partition(&o, 0.1), Err(Error::NotWhitney { .. })));
    }

    #[test]
    fn bump_profile() {
        let q = GaussianCube::new(0, 0, vec![0]).unwrap();
        let b = Bump::for_cube(&q);
        assert_eq!(b.raw(&[0.5]), 1.0);
        assert_eq!(b.raw(&[0.0]), 1.0);
        assert_eq!(b.raw(&[1.0 + 1.0 / 16.0]), 0.0);
        let mid = b.raw(&[1.0 + 1.0 / 32.0]);
        assert!((mid - 0.5).abs() < 1e-12);
    }
}
