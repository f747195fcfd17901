use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{rng_for, Check, SuiteReport};
use crate::config::SessionConfig;
use crate::error::Result;
use crate::geometry::{distance, AxisBox};
use crate::grid::{cubes_in_layer, cubes_in_layer_within, min_label_layer, CubeLabel, GaussianCube, LabelClass};
use crate::lattice::{Lattice, RegionMask};
use crate::whitney::{
    cover_open_set, cover_piece_bound, CoverPiece, grid_slack, separation_bound, separation_check, thicken_cube, thicken_label_class,
    whitney_check, whitney_partition, WhitneyCertificate,
};

/// Accumulated whitney checks over many masks.
#[derive(Default)]
struct CertTally {
    pieces: usize,
    violations: usize,
    max_ratio: f64,
}

impl CertTally {
    fn add(&mut self, c: &WhitneyCertificate) {
        self.pieces += 1;
        self.violations += c.violations;
        self.max_ratio = self.max_ratio.max(c.max_ratio);
    }
}

fn tally(certs: Vec<WhitneyCertificate>) -> CertTally {
    let mut t = CertTally::default();
    for c in &certs {
        t.add(c);
    }
    t
}

/// Truncation window of the label classes and the band meeting the low-layer
/// cubes. In the plane both are thin strips along the positive axis, short
/// enough that every member cube is resolved at h = 2^-6.
fn windows(n: usize, p: u32) -> (AxisBox, AxisBox) {
    let e = |k: u32| 2f64.powi(k as i32);
    if n == 1 {
        let t = if p <= 2 { 64.0 } else { 128.0 };
        (AxisBox::symmetric(1, t).unwrap(), AxisBox::symmetric(1, e(p + 1)).unwrap())
    } else {
        let w = if p <= 2 { 0.5 } else { 0.25 };
        (
            AxisBox::new(vec![-64.0, 0.0], vec![64.0, w]).unwrap(),
            AxisBox::new(vec![-e(p + 1), 0.0], vec![e(p + 1), w]).unwrap(),
        )
    }
}

/// Labels tested in the plane: their members meet the strip in the first
/// label layer.
fn strip_labels<R: Rng + ?Sized>(rng: &mut R, p: u32, count: usize) -> Vec<CubeLabel> {
    let kappa = p + 4;
    let w = if p <= 2 { 0.5 } else { 0.25 };
    let rows = (w * 2f64.powi(p as i32 + 2)) as u32;
    (0..count)
        .map(|_| {
            let i1 = rng.random_range(1..=1u32 << kappa);
            let i2 = rng.random_range(1..=rows);
            CubeLabel::new(vec![i1, i2], kappa).expect("components in range")
        })
        .collect()
}

/// Low-layer cubes tested per layer in the plane at p = 4, where a single
/// thickened cube already spans a window of side about 32.
const CUBES_PER_LAYER: usize = 16;

/// Thickened cubes of the low layers and thickened label classes pass the
/// Whitney check at the stated constants.
pub fn thickening_suite(cfg: &SessionConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(3, super::SUITES[2].1);
    let mut rng = rng_for(cfg.seed, 300);
    for n in 1..=2usize {
        let h = if n == 1 { 1.0 / 256.0 } else { 1.0 / 64.0 };
        let sqrt_n = (n as f64).sqrt();
        for p in [2u32, 4] {
            let alpha = 2f64.powi(p as i32);
            let (truncation, band) = windows(n, p);
            let cubes: Vec<GaussianCube> = (0..=p + 1)
                .flat_map(|l| {
                    let all: Vec<GaussianCube> =
                        if n == 1 { cubes_in_layer(1, 0, l).collect() } else { cubes_in_layer_within(0, l, &band).collect() };
                    if n == 1 || all.len() <= CUBES_PER_LAYER {
                        return all;
                    }
                    // Both ends of the band and a random middle.
                    let ends = CUBES_PER_LAYER / 4;
                    let mut pick: Vec<GaussianCube> = all[..ends].iter().chain(&all[all.len() - ends..]).cloned().collect();
                    pick.extend(all[ends..all.len() - ends].choose_multiple(&mut rng, CUBES_PER_LAYER - 2 * ends).cloned());
                    pick
                })
                .collect();
            let lambda = 2f64.powi(2 * p as i32 + 2) * sqrt_n;
            let certs = cubes
                .par_iter()
                .map(|q| thicken_cube(q, alpha, h).map(|m| whitney_check(&m, lambda)))
                .collect::<Result<Vec<_>>>()?;
            let t = tally(certs);
            report.check(Check::zero(format!("n={n} p={p} thickened cubes ({}) violations", t.pieces), t.violations));
            report.constant(&format!("n{n}_p{p}_cube_max_ratio"), t.max_ratio);

            let labels: Vec<CubeLabel> =
                if n == 1 { CubeLabel::all(1, p + 4).collect() } else { strip_labels(&mut rng, p, 24) };
            let lambda = 2f64.powi(p as i32 + 3) * sqrt_n;
            let certs = labels
                .into_par_iter()
                .map(|label| {
                    let class = LabelClass::new(p, label, truncation.clone())?;
                    thicken_label_class(&class, alpha, h).map(|m| whitney_check(&m, lambda))
                })
                .collect::<Result<Vec<_>>>()?;
            let t = tally(certs);
            report.check(Check::zero(format!("n={n} p={p} thickened label classes ({}) violations", t.pieces), t.violations));
            report.constant(&format!("n{n}_p{p}_label_max_ratio"), t.max_ratio);
        }
    }
    Ok(report)
}

/// Cubes of layer `l` carrying `label`.
fn label_members(label: &CubeLabel, l: u32) -> Vec<GaussianCube> {
    let side = 1i64 << label.kappa;
    cubes_in_layer(label.dim(), -(label.kappa as i32), l)
        .map(|parent| {
            let index = parent.index.iter().zip(&label.components).map(|(i, c)| i * side + *c as i64 - 1).collect();
            GaussianCube::new(0, l, index).expect("member lies in the layer")
        })
        .collect()
}

fn nearest<'a>(q: &GaussianCube, pool: &'a [GaussianCube]) -> Option<&'a GaussianCube> {
    let c = q.center();
    pool.iter()
        .filter(|r| *r != q)
        .min_by(|a, b| distance(&a.center(), &c).total_cmp(&distance(&b.center(), &c)))
}

/// Same-label cubes stay apart after thickening; across adjacent layers by
/// at least the explicit bound.
pub fn separation_suite(cfg: &SessionConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(4, super::SUITES[3].1);
    let mut rng = rng_for(cfg.seed, 400);
    for n in 1..=2usize {
        let h = if n == 1 { 1.0 / 256.0 } else { 1.0 / 64.0 };
        let slack = grid_slack(h, n);
        for (p, kappa) in [(1u32, 5u32), (2, 6)] {
            let l0 = min_label_layer(kappa).max(p + 2);
            let labels: Vec<CubeLabel> = if n == 1 {
                CubeLabel::all(1, kappa).collect()
            } else {
                (0..4)
                    .map(|_| {
                        let c = (0..2).map(|_| rng.random_range(1..=1u32 << kappa)).collect();
                        CubeLabel::new(c, kappa).expect("components in range")
                    })
                    .collect()
            };
            // (label, q1, q2, adjacent-layer bound or None for same layer)
            let mut pairs: Vec<(CubeLabel, GaussianCube, GaussianCube, Option<f64>)> = Vec::new();
            for label in &labels {
                for l in l0..l0 + 2 {
                    let here = label_members(label, l);
                    let above = label_members(label, l + 1);
                    let chosen: Vec<&GaussianCube> =
                        if n == 1 { here.iter().collect() } else { here.choose_multiple(&mut rng, 16).collect() };
                    for q in chosen {
                        if let Some(r) = nearest(q, &here) {
                            pairs.push((label.clone(), q.clone(), r.clone(), None));
                        }
                        if let Some(r) = nearest(q, &above) {
                            pairs.push((label.clone(), q.clone(), r.clone(), Some(separation_bound(p, kappa, l))));
                        }
                    }
                }
            }
            let gaps = pairs
                .par_iter()
                .map(|(label, q1, q2, _)| separation_check(p, label, q1, q2, h))
                .collect::<Result<Vec<f64>>>()?;
            let (mut touching, mut below_bound, mut min_gap, mut min_margin) = (0, 0, f64::INFINITY, f64::INFINITY);
            for ((_, _, _, bound), gap) in pairs.iter().zip(&gaps) {
                touching += usize::from(!(*gap > 0.0));
                min_gap = min_gap.min(*gap);
                if let Some(b) = bound {
                    below_bound += usize::from(*gap < b - slack);
                    min_margin = min_margin.min(gap - b);
                }
            }
            report.check(Check::zero(format!("n={n} p={p} kappa={kappa} touching pairs of {}", pairs.len()), touching));
            report.check(Check::zero(format!("n={n} p={p} kappa={kappa} adjacent-layer pairs below bound"), below_bound));
            report.constant(&format!("n{n}_p{p}_min_gap"), min_gap);
            report.constant(&format!("n{n}_p{p}_min_bound_margin"), min_margin);
        }
    }
    Ok(report)
}

/// Random bounded open sets: unions of intervals (n = 1) or of disks and
/// squares (n = 2), away from the window edge.
pub(super) fn random_masks(cfg: &SessionConfig) -> Vec<RegionMask> {
    let mut rng = rng_for(cfg.seed, 500);
    (0..cfg.samples.masks)
        .map(|i| {
            let n = 1 + i % 2;
            let lat = if n == 1 {
                Lattice::symmetric(1, 16.0, 1.0 / 64.0).unwrap()
            } else {
                Lattice::symmetric(2, 8.0, 1.0 / 32.0).unwrap()
            };
            loop {
                let shapes: Vec<(Vec<f64>, f64, bool)> = (0..rng.random_range(1..=4))
                    .map(|_| {
                        let reach = if n == 1 { 12.0 } else { 6.0 };
                        let c = (0..n).map(|_| reach * (2.0 * rng.random::<f64>() - 1.0).powi(3)).collect();
                        let r = (0.02f64.ln() + (1.5f64.ln() - 0.02f64.ln()) * rng.random::<f64>()).exp();
                        (c, r, rng.random::<bool>())
                    })
                    .collect();
                let mask = RegionMask::from_fn(lat.clone(), |x| {
                    shapes.iter().any(|(c, r, round)| {
                        if *round {
                            distance(x, c) < *r
                        } else {
                            x.iter().zip(c).all(|(a, b)| (a - b).abs() < *r)
                        }
                    })
                });
                if mask.count() > 0 {
                    break mask;
                }
            }
        })
        .collect()
}

/// Union of the pieces on the lattice of the covered set.
pub fn piece_union(lat: &Lattice, pieces: &[CoverPiece]) -> RegionMask {
    let mut union = RegionMask::empty(lat.clone());
    for piece in pieces {
        let own = piece.mask.lattice();
        for i in piece.mask.ones() {
            if let Some(j) = lat.index_of(&own.coords_of(i)) {
                union.set(j, true);
            }
        }
    }
    union
}

/// Covers of random open sets by thickened pieces.
pub fn cover_suite(cfg: &SessionConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(5, super::SUITES[4].1);
    let p = 2u32;
    let masks = random_masks(cfg);
    let outcomes = masks
        .par_iter()
        .map(|o| {
            let pieces = cover_open_set(o, p)?;
            let lat = o.lattice();
            let union = piece_union(lat, &pieces);
            let mismatched = union.cells().iter().zip(o.cells()).filter(|(a, b)| a != b).count();
            let lambda = 2f64.powi(2 * p as i32 + 2) * (lat.dim() as f64).sqrt();
            let certs: Vec<WhitneyCertificate> = pieces.iter().map(|piece| whitney_check(&piece.mask, lambda)).collect();
            let bound = cover_piece_bound(lat.dim(), p).map_or(f64::INFINITY, |b| b as f64);
            Ok((mismatched, tally(certs), pieces.len() as f64, bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut mismatched, mut violations, mut over, mut most) = (0, 0, 0, 0.0f64);
    let mut max_ratio = 0.0f64;
    for (m, t, count, bound) in outcomes {
        mismatched += m;
        violations += t.violations;
        max_ratio = max_ratio.max(t.max_ratio);
        over += usize::from(count > bound);
        most = most.max(count);
    }
    report.check(Check::zero(format!("cells where the union of pieces differs from O ({} masks)", masks.len()), mismatched));
    report.check(Check::zero("piece Whitney violations", violations));
    report.check(Check::zero("covers exceeding the piece bound", over));
    report.constant("max_pieces", most);
    report.constant("max_piece_ratio", max_ratio);
    Ok(report)
}

/// Whitney partitions of random open sets, checked against one session `rho`.
pub fn partition_suite(cfg: &SessionConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(6, super::SUITES[5].1);
    let masks = random_masks(cfg);
    let parts = masks
        .par_iter()
        .map(|o| whitney_partition(o, 64.0 * (o.dim() as f64).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let rho = parts.iter().map(|p| p.rho).fold(1.0, f64::max);
    let checks: Vec<_> = parts
        .par_iter()
        .zip(&masks)
        .enumerate()
        .map(|(i, (part, o))| part.check(o, rho, cfg.samples.partition_points, cfg.seed.wrapping_add(i as u64)))
        .collect();
    let sum = |f: fn(&crate::whitney::PartitionCheck) -> usize| checks.iter().map(f).sum::<usize>();
    report.check(Check::zero(format!("overlapping cells ({} partitions)", parts.len()), sum(|c| c.overlaps)));
    report.check(Check::zero("coverage errors", sum(|c| c.coverage_errors)));
    report.check(Check::zero("diam > d(Q, complement)", sum(|c| c.lower_violations)));
    report.check(Check::zero("d(Q, complement) > rho diam", sum(|c| c.upper_violations)));
    report.check(Check::zero("bump supports outside Q*", sum(|c| c.support_violations)));
    report.check(Check::zero("bumps outside [1/rho, 1] on Q", sum(|c| c.bound_violations)));
    let worst = checks.iter().map(|c| c.max_sum_error).fold(0.0, f64::max);
    report.check(Check::at_most("max |sum phi - 1|", worst, cfg.tolerances.partition_sum));
    report.constant("rho", rho);
    report.constant("cubes", parts.iter().map(|p| p.len()).sum::<usize>() as f64);
    report.constant("fallback_cells", parts.iter().map(|p| p.fallback).sum::<usize>() as f64);
    Ok(report)
}
