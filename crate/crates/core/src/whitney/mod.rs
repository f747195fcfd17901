//! Thickenings `A + C_alpha`, admissible Whitney sets, the covering of open
//! sets by Whitney pieces and the Whitney partition of unity.
//!
//! Distance inequalities on masks are tested with the additive slack
//! `2 h sqrt(n)` returned by [`grid_slack`].

mod cover;
mod partition;
mod pieces;

use serde::{Deserialize, Serialize};

use crate::geometry::admissibility_radius;
pub use crate::lattice::RegionMask;

pub use cover::{cover_open_set, cover_piece_bound, CoverPiece, PieceKey};
pub use partition::{whitney_partition, Bump, PartitionCheck, WhitneyPartition, BUMP_EXPANSION};
pub use pieces::{
    mask_distance, separation_bound, separation_check, thicken_cube, thicken_label_class, thickening_reach,
};

/// `2 h sqrt(n)`.
pub fn grid_slack(h: f64, n: usize) -> f64 {
    2.0 * h * (n as f64).sqrt()
}

/// Whether `z` is the centre of an `alpha`-admissible ball meeting `a`:
/// `d(z, A) < alpha m(z)`, or `z` in `A`.
pub fn thickened_contains(a: &RegionMask, alpha: f64, z: &[f64]) -> bool {
    a.contains_point(z) || a.distance_to(z) < alpha * admissibility_radius(z)
}

/// `A + C_alpha` on the lattice of `a`: cells whose centre is within
/// `alpha m` of a cell centre of `A`.
///
/// Centre-to-centre distances overestimate the distance to the union of
/// cells by at most `h sqrt(n) / 2`, so the mask is an inner approximation.
pub fn thicken(a: &RegionMask, alpha: f64) -> RegionMask {
    let field = a.distance_field();
    let lat = a.lattice().clone();
    let mut buf = vec![0.0; lat.dim()];
    let mut out = a.clone();
    for (i, d) in field.iter().enumerate() {
        if !a.contains_cell(i) {
            lat.center_into(i, &mut buf);
            out.set(i, *d < alpha * admissibility_radius(&buf));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCertificate {
    pub lambda: f64,
    pub samples_checked: usize,
    /// Largest `d(x, complement) / m(x)` over the cells of the set.
    pub max_ratio: f64,
    pub violations: usize,
    pub slack: f64,
}

impl WhitneyCertificate {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `d(x, complement A) <= lambda m(x) + 2h sqrt(n)` at every cell
/// centre of `A`; the window exterior counts as complement.
pub fn whitney_check(a: &RegionMask, lambda: f64) -> WhitneyCertificate {
    let slack = grid_slack(a.h(), a.dim());
    let field = a.complement_distance_field();
    let lat = a.lattice();
    let mut buf = vec![0.0; lat.dim()];
    let mut cert = WhitneyCertificate { lambda, samples_checked: 0, max_ratio: 0.0, violations: 0, slack };
    for i in a.ones() {
        lat.center_into(i, &mut buf);
        let m = admissibility_radius(&buf);
        cert.samples_checked += 1;
        cert.max_ratio = cert.max_ratio.max(field[i] / m);
        if field[i] > lambda * m + slack {
            cert.violations += 1;
        }
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn unit_interval() -> RegionMask {
        let lat = Lattice::symmetric(1, 4.0, 1.0 / 64.0).unwrap();
        RegionMask::from_fn(lat, |x| (0.0..1.0).contains(&x[0]))
    }

    #[test]
    fn thickened_contains_examples() {
        let a = unit_interval();
        assert!(thickened_contains(&a, 1.0, &[1.5]));
        assert!(!thickened_contains(&a, 1.0, &[2.1]));
        assert!(thickened_contains(&a, 1.0, &[0.3]));
    }

    #[test]
    fn thicken_is_monotone_and_extensive() {
        let a = unit_interval();
        let t1 = thicken(&a, 0.5);
        let t2 = thicken(&a, 1.0);
        assert!(a.is_subset_of(&t1).unwrap());
        assert!(t1.is_subset_of(&t2).unwrap());
        let e = RegionMask::empty(a.lattice().clone());
        assert_eq!(thicken(&e, 2.0), e);
        // Cell-centre thickening agrees with the point predicate up to one cell.
        for i in 0..t2.lattice().len() {
            let c = t2.lattice().center(i);
            if t2.contains_cell(i) {
                assert!(thickened_contains(&a, 1.0, &c));
            }
        }
    }

    #[test]
    fn whitney_examples() {
        let lat = Lattice::symmetric(2, 2.0, 0.125).unwrap();
        let one = RegionMask::from_indices(lat.clone(), [37]);
        let cert = whitney_check(&one, 0.125 * 2f64.sqrt());
        assert_eq!(cert.violations, 0);
        let full = RegionMask::full(lat);
        let cert = whitney_check(&full, 0.01);
        assert!(cert.violations > 0);
        assert!(cert.max_ratio > 0.01);
    }
}
