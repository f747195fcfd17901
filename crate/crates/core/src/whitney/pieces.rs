use std::collections::HashSet;

use crate::error::{invalid, Error, Result};
use crate::geometry::{admissibility_radius, box_distance, norm};
use crate::grid::{label_of, CubeLabel, GaussianCube, LabelClass};
use crate::lattice::{dyadic_level, Lattice, RegionMask};

/// A radius beyond which no point of `Q + C_alpha` lies from the box `Q`.
///
/// Points at distance `d` from `Q` have `|z| >= D - d` and `|z| <= D_max + d`
/// with `D`, `D_max` the smallest and largest norms on `Q`; combined with
/// `d < alpha m(z)` this bounds `d` from both sides of the origin.
pub fn thickening_reach(lower: &[f64], upper: &[f64], alpha: f64) -> f64 {
    let origin = vec![0.0; lower.len()];
    let d_min = box_distance(lower, upper, &origin);
    let far: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| a.abs().max(b.abs())).collect();
    let d_max = norm(&far);
    let near = if d_min >= alpha + 1.0 { 2.0 * alpha / (d_min + (d_min * d_min - 4.0 * alpha).sqrt()) } else { alpha };
    let around = (d_max + 1.0).max(0.5 * (d_max + (d_max * d_max + 4.0 * alpha).sqrt()));
    alpha.min(near).min(around)
}

fn reach_cells(q: &GaussianCube, reach: f64, h: f64) -> (Vec<i64>, Vec<i64>) {
    let lo = q.lower().iter().map(|v| ((v - reach) / h).floor() as i64 - 1).collect();
    let hi = q.upper().iter().map(|v| ((v + reach) / h).ceil() as i64 + 1).collect();
    (lo, hi)
}

/// Marks on `mask` the cells whose centre `z` has `d(z, Q) < alpha m(z)` or lies in `Q`.
fn rasterize(mask: &mut RegionMask, q: &GaussianCube, alpha: f64) {
    let lat = mask.lattice().clone();
    let (lower, upper) = (q.lower(), q.upper());
    let (lo, hi) = reach_cells(q, thickening_reach(&lower, &upper, alpha), lat.h());
    let mut z = vec![0.0; lat.dim()];
    lat.for_each_in_range(&lo, &hi, |i| {
        lat.center_into(i, &mut z);
        if q.contains(&z) || box_distance(&lower, &upper, &z) < alpha * admissibility_radius(&z) {
            mask.set(i, true);
        }
    });
}

/// `Q + C_alpha` rasterised at cell side `h` on a window that contains it
/// with at least one spare cell on every side.
pub fn thicken_cube(q: &GaussianCube, alpha: f64, h: f64) -> Result<RegionMask> {
    let level = dyadic_level(h)?;
    if q.side() < h {
        return Err(Error::Resolution(format!("cube side {} is below h = {h}", q.side())));
    }
    let reach = thickening_reach(&q.lower(), &q.upper(), alpha);
    let (lo, hi) = reach_cells(q, reach, h);
    let dims = lo.iter().zip(&hi).map(|(a, b)| (b - a) as usize).collect();
    let mut mask = RegionMask::empty(Lattice::new(level, lo, dims)?);
    rasterize(&mut mask, q, alpha);
    Ok(mask)
}

/// `A + C_alpha` for the members of a label class that meet its truncation window.
pub fn thicken_label_class(class: &LabelClass, alpha: f64, h: f64) -> Result<RegionMask> {
    let level = dyadic_level(h)?;
    let members = class.members();
    let t = &class.truncation;
    let n = t.dim();
    let mut lo: Vec<i64> = t.lower.iter().map(|v| (v / h).floor() as i64 - 1).collect();
    let mut hi: Vec<i64> = t.upper.iter().map(|v| (v / h).ceil() as i64 + 1).collect();
    for q in &members {
        if q.side() < h {
            return Err(Error::Resolution(format!("member side {} is below h = {h}", q.side())));
        }
        let (a, b) = reach_cells(q, thickening_reach(&q.lower(), &q.upper(), alpha), h);
        for d in 0..n {
            lo[d] = lo[d].min(a[d]);
            hi[d] = hi[d].max(b[d]);
        }
    }
    let dims = lo.iter().zip(&hi).map(|(a, b)| (b - a) as usize).collect();
    let mut mask = RegionMask::empty(Lattice::new(level, lo, dims)?);
    for q in &members {
        rasterize(&mut mask, q, alpha);
    }
    Ok(mask)
}

fn boundary_cells(mask: &RegionMask) -> Vec<Vec<i64>> {
    let lat = mask.lattice();
    let n = lat.dim();
    mask.ones()
        .filter_map(|i| {
            let g = lat.coords_of(i);
            let mut nb = g.clone();
            let on_edge = (0..n).any(|d| {
                [-1i64, 1].iter().any(|s| {
                    nb[d] = g[d] + s;
                    let outside = lat.index_of(&nb).is_none_or(|j| !mask.contains_cell(j));
                    nb[d] = g[d];
                    outside
                })
            });
            on_edge.then_some(g)
        })
        .collect()
}

/// Smallest centre-to-centre distance between the cells of two masks with
/// the same cell side (0 when they share a cell). Exteriors are ignored.
pub fn mask_distance(a: &RegionMask, b: &RegionMask) -> Result<f64> {
    if a.lattice().level() != b.lattice().level() {
        return Err(Error::GridMismatch);
    }
    let cells_b: HashSet<Vec<i64>> = b.ones().map(|i| b.lattice().coords_of(i)).collect();
    if a.ones().any(|i| cells_b.contains(&a.lattice().coords_of(i))) {
        return Ok(0.0);
    }
    let ba = boundary_cells(a);
    let bb = boundary_cells(b);
    let mut best = i64::MAX;
    for x in &ba {
        for y in &bb {
            let d2: i64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
            best = best.min(d2);
        }
    }
    if best == i64::MAX {
        return Ok(f64::INFINITY);
    }
    Ok((best as f64).sqrt() * a.h())
}

/// `(2^kappa - 2^{p+3} - 1) / 2^{l+1}`: the separation of same-label
/// thickenings in adjacent layers `l`, `l + 1`.
pub fn separation_bound(p: u32, kappa: u32, l: u32) -> f64 {
    (2f64.powi(kappa as i32) - 2f64.powi(p as i32 + 3) - 1.0) / 2f64.powi(l as i32 + 1)
}

/// Distance between `Q1 + C_{2^p}` and `Q2 + C_{2^p}` for two distinct cubes
/// with the same `kappa`-label, rasterised at side `h`.
pub fn separation_check(p: u32, label: &CubeLabel, q1: &GaussianCube, q2: &GaussianCube, h: f64) -> Result<f64> {
    let kappa = label.kappa;
    if p < 1 || kappa < p + 4 {
        return Err(invalid(format!("need p >= 1 and kappa >= p + 4, got p = {p}, kappa = {kappa}")));
    }
    if q1 == q2 {
        return Err(invalid("separation needs two distinct cubes"));
    }
    let min_layer = (p + 2).max((kappa + 1).div_ceil(2));
    for q in [q1, q2] {
        if q.l < min_layer {
            return Err(invalid(format!("cube layer {} is below {min_layer}", q.l)));
        }
        if label_of(q, kappa)? != *label {
            return Err(invalid(format!("cube {:?} does not carry label {:?}", q.index, label.components)));
        }
    }
    let alpha = 2f64.powi(p as i32);
    let a = thicken_cube(q1, alpha, h)?;
    let b = thicken_cube(q2, alpha, h)?;
    mask_distance(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AxisBox;
    use crate::grid::{cube_of, cubes_in_layer};

    #[test]
    fn reach_bounds_the_thickening() {
        for l in 0..=4 {
            for q in cubes_in_layer(1, 0, l) {
                let reach = thickening_reach(&q.lower(), &q.upper(), 4.0);
                for step in 0..400 {
                    let d = reach + 1e-9 + step as f64 * 0.05;
                    for z in [q.lower()[0] - d, q.upper()[0] + d] {
                        assert!(d >= 4.0 * admissibility_radius(&[z]), "layer {l}, z {z}");
                    }
                }
            }
        }
    }

    #[test]
    fn thickened_cube_contains_cube_and_has_margin() {
        let q = GaussianCube::new(0, 2, vec![9, -3]).unwrap();
        let m = thicken_cube(&q, 4.0, 1.0 / 32.0).unwrap();
        let lat = m.lattice().clone();
        for i in 0..lat.len() {
            let c = lat.center(i);
            if q.contains(&c) {
                assert!(m.contains_cell(i));
            }
        }
        let (lo, hi) = m.support_bounds().unwrap();
        for d in 0..2 {
            assert!(lo[d] > lat.origin()[d]);
            assert!(hi[d] < lat.origin()[d] + lat.dims()[d] as i64);
        }
    }

    #[test]
    fn one_dimensional_same_layer_pair_is_separated() {
        let label = label_of(&cube_of(&[4.1], 0).unwrap(), 5).unwrap();
        let members: Vec<_> = cubes_in_layer(1, 0, 3).filter(|q| label_of(q, 5).unwrap() == label).collect();
        assert_eq!(members.len(), 2);
        let d = separation_check(1, &label, &members[0], &members[1], 1.0 / 256.0).unwrap();
        assert!(d > 0.0);
        assert!(separation_check(1, &label, &members[0], &members[0], 1.0 / 256.0).is_err());
    }

    #[test]
    fn mask_distance_matches_brute_force() {
        let lat = Lattice::symmetric(2, 2.0, 0.125).unwrap();
        let a = RegionMask::from_fn(lat.clone(), |x| x[0] < -0.7 && x[1].abs() < 0.5);
        let b = RegionMask::from_fn(lat.clone(), |x| (x[0] - 1.0).powi(2) + x[1].powi(2) < 0.3);
        let want = a
            .ones()
            .flat_map(|i| b.ones().map(move |j| (i, j)))
            .map(|(i, j)| crate::geometry::distance(&lat.center(i), &lat.center(j)))
            .fold(f64::INFINITY, f64::min);
        assert!((mask_distance(&a, &b).unwrap() - want).abs() < 1e-12);
        assert_eq!(mask_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn label_class_thickening_covers_members() {
        let w = AxisBox::new(vec![16.0], vec![40.0]).unwrap();
        let class = LabelClass::new(2, CubeLabel::new(vec![3], 6).unwrap(), w).unwrap();
        let m = thicken_label_class(&class, 4.0, 1.0 / 256.0).unwrap();
        for q in class.members() {
            assert!(m.contains_point(&q.center()));
        }
    }
}
