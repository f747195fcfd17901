use rayon::prelude::*;

use super::split::base_distance;
use crate::error::{invalid, Result};
use crate::geometry::admissibility_radius;
use crate::lattice::RegionMask;
use crate::tent::{apply_j, density_set, tent_levels, NormConfig, SpatialFunction, TentFunction};
use crate::whitney::PieceKey;

#[derive(Clone, Debug)]
pub struct LadderLevel {
    pub k: i32,
    /// `O_k = {J g > 2^k}`.
    pub o: RegionMask,
    /// `O_k^[eta_bar]`, the complement of the density set of `complement O_k`.
    pub o_density: RegionMask,
}

/// Super-level sets of `J g` at the dyadic heights `2^k`, `k_min..=k_max`.
/// `O_{k_min}` is the whole support of `J g` and `O_{k_max}` is empty.
#[derive(Clone, Debug)]
pub struct StoppingLadder {
    pub eta: f64,
    pub eta_bar: f64,
    pub jg: SpatialFunction,
    pub levels: Vec<LadderLevel>,
    /// Active pairs of `supp g` in no tent `T_{1-eta}(O_k^[eta_bar])`.
    pub uncovered: usize,
}

impl StoppingLadder {
    pub fn k_range(&self) -> Option<(i32, i32)> {
        Some((self.levels.first()?.k, self.levels.last()?.k))
    }

    pub fn level(&self, k: i32) -> Option<&LadderLevel> {
        let (lo, hi) = self.k_range()?;
        (lo..=hi).contains(&k).then(|| &self.levels[(k - lo) as usize])
    }

    /// Levels where `O_{k+1}` is not a subset of `O_k`, plus those where `O_k`
    /// is not inside `O_k^[eta_bar]`.
    pub fn nesting_failures(&self) -> usize {
        let mut bad = 0;
        for w in self.levels.windows(2) {
            bad += (!w[1].o.is_subset_of(&w[0].o).unwrap_or(false)) as usize;
        }
        for lv in &self.levels {
            bad += (!lv.o.is_subset_of(&lv.o_density).unwrap_or(false)) as usize;
        }
        bad
    }

    /// Cells of some `O_k^[eta_bar]` not within `16 m(x)` of the base set.
    pub fn thickening_violations(&self, key: &PieceKey) -> usize {
        let lattice = self.jg.grid().lattice();
        let mut cells: Vec<usize> = self.levels.iter().flat_map(|lv| lv.o_density.ones()).collect();
        cells.sort_unstable();
        cells.dedup();
        cells
            .par_iter()
            .filter(|&&x| {
                let c = lattice.center(x);
                let reach = 16.0 * admissibility_radius(&c);
                base_distance(key, &c, reach + lattice.h()) >= reach
            })
            .count()
    }
}

fn dyadic_floor_below(v: f64) -> i32 {
    let mut k = v.log2().floor() as i32;
    while 2f64.powi(k) >= v {
        k -= 1;
    }
    while 2f64.powi(k + 1) < v {
        k += 1;
    }
    k
}

fn dyadic_ceil(v: f64) -> i32 {
    let mut k = v.log2().ceil() as i32;
    while 2f64.powi(k) < v {
        k += 1;
    }
    while 2f64.powi(k - 1) >= v {
        k -= 1;
    }
    k
}

pub fn stopping_ladder(g: &TentFunction, cfg: &NormConfig, eta: f64, eta_bar: f64, radii: usize) -> Result<StoppingLadder> {
    if !(eta > 0.5 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (1/2, 1), got {eta}")));
    }
    if !(eta_bar > 0.0 && eta_bar < 1.0) {
        return Err(invalid(format!("eta_bar must lie in (0, 1), got {eta_bar}")));
    }
    let jg = apply_j(g, cfg, 1.0)?;
    let grid = g.grid();
    let Some(min) = jg.min_positive() else {
        return Ok(StoppingLadder { eta, eta_bar, jg, levels: vec![], uncovered: 0 });
    };
    let (k_min, k_max) = (dyadic_floor_below(min), dyadic_ceil(jg.max()));
    let levels: Vec<LadderLevel> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let o = jg.super_level(2f64.powi(k));
            let o_density = density_set(&o.complement(), eta_bar, radii)?.complement();
            Ok(LadderLevel { k, o, o_density })
        })
        .collect::<Result<_>>()?;
    let tents: Vec<Vec<usize>> = levels.iter().map(|lv| tent_levels(grid, &lv.o_density, 1.0 - eta)).collect();
    let uncovered = g
        .entries()
        .filter(|&(a, _)| {
            let (j, s) = grid.split(a);
            !tents.iter().any(|t| s < t[j])
        })
        .count();
    Ok(StoppingLadder { eta, eta_bar, jg, levels, uncovered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::support_splitter;
    use crate::tent::{DGrid, DGridSpec};
    use std::sync::Arc;

    #[test]
    fn dyadic_bounds() {
        assert_eq!(dyadic_floor_below(1.0), -1);
        assert_eq!(dyadic_floor_below(1.5), 0);
        assert_eq!(dyadic_ceil(1.0), 0);
        assert_eq!(dyadic_ceil(1.5), 1);
        assert_eq!(dyadic_ceil(0.3), -1);
    }

    #[test]
    fn ladder_invariants() {
        let g = Arc::new(DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 64.0, t_min: 1.0 / 64.0, t_ratio: 2f64.powf(0.25) }).unwrap());
        let f = TentFunction::from_fn(g.clone(), |y, t| if y[0] > 0.1 && y[0] < 0.9 { (1.0 + 5.0 * y[0]) * t.sqrt() } else { 0.0 }).unwrap();
        let cfg = NormConfig::new(2.0).unwrap();
        let pieces = support_splitter(&f).unwrap();
        assert_eq!(pieces.len(), 1);
        let ladder = stopping_ladder(&pieces[0].g, &cfg, 0.75, 0.7, 32).unwrap();
        let (lo, hi) = ladder.k_range().unwrap();
        assert!(lo < hi);
        assert_eq!(ladder.level(lo).unwrap().o.count(), ladder.jg.values.iter().filter(|&&v| v > 0.0).count());
        assert!(ladder.level(hi).unwrap().o.is_empty());
        assert!(ladder.level(hi).unwrap().o_density.is_empty());
        assert_eq!(ladder.nesting_failures(), 0);
        assert_eq!(ladder.uncovered, 0);
        assert_eq!(ladder.thickening_violations(&pieces[0].key), 0);

        let zero = stopping_ladder(&TentFunction::zero(g), &cfg, 0.75, 0.7, 32).unwrap();
        assert!(zero.levels.is_empty());
    }
}
