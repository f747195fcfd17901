use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{admissibility_radius, box_distance, AxisBox};
use crate::grid::{cubes_in_layer_within, label_of, layers_meeting, CubeLabel, GaussianCube};
use crate::lattice::RegionMask;

/// The set a cover piece is built around: a single cube of a low layer or a
/// whole label class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PieceKey {
    Cube { cube: GaussianCube },
    Label { label: CubeLabel },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPiece {
    pub key: PieceKey,
    /// `O ∩ (W + C_{2^p})`, cropped to its bounding box plus one cell.
    pub mask: RegionMask,
}

/// `2^n (1 + 2^{(p+4)n} + ... + 2^{(p+1)(p+4)n}) + 2^{(p+4)n}`, or `None` on overflow.
pub fn cover_piece_bound(n: usize, p: u32) -> Option<u128> {
    let step = (p as usize + 4) * n;
    let mut sum = 0u128;
    for j in 0..=(p as usize + 1) {
        sum = sum.checked_add(1u128.checked_shl((j * step) as u32)?)?;
    }
    let labels = 1u128.checked_shl(step as u32)?;
    (1u128 << n).checked_mul(sum)?.checked_add(labels)
}

/// Splits an open set into the pieces `O ∩ (Q + C_{2^p})` for cubes `Q` of
/// `Delta_{0,l}`, `l <= p + 1`, and `O ∩ (A_p^(i) + C_{2^p})` for labels `i`.
///
/// A cell of `O` with centre `z` joins the piece of every cube within
/// `2^p m(z)` of `z` (and of the cube containing `z`). Only nonempty pieces
/// are returned, ordered by key.
pub fn cover_open_set(o: &RegionMask, p: u32) -> Result<Vec<CoverPiece>> {
    if p < 2 {
        return Err(invalid(format!("cover needs p >= 2, got {p}")));
    }
    let alpha = 2f64.powi(p as i32);
    let kappa = p + 4;
    let lat = o.lattice();
    let n = lat.dim();
    let mut groups: BTreeMap<PieceKey, Vec<usize>> = BTreeMap::new();
    let mut z = vec![0.0; n];
    for i in o.ones() {
        lat.center_into(i, &mut z);
        let r = alpha * admissibility_radius(&z);
        let reach = AxisBox { lower: z.iter().map(|v| v - r).collect(), upper: z.iter().map(|v| v + r).collect() };
        for l in layers_meeting(&reach) {
            for q in cubes_in_layer_within(0, l, &reach) {
                let (lo, hi) = (q.lower(), q.upper());
                if !(q.contains(&z) || box_distance(&lo, &hi, &z) < r) {
                    continue;
                }
                let key = if l <= p + 1 {
                    PieceKey::Cube { cube: q }
                } else {
                    PieceKey::Label { label: label_of(&q, kappa)? }
                };
                let cells = groups.entry(key).or_default();
                if cells.last() != Some(&i) {
                    cells.push(i);
                }
            }
        }
    }
    Ok(groups
        .into_iter()
        .filter_map(|(key, cells)| {
            let mask = RegionMask::from_indices(lat.clone(), cells).crop(1)?;
            Some(CoverPiece { key, mask })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::whitney::whitney_check;

    #[test]
    fn explicit_bound() {
        assert_eq!(cover_piece_bound(1, 2), Some(532_674));
        assert!(cover_piece_bound(2, 4).is_some());
    }

    #[test]
    fn empty_set_has_no_pieces() {
        let lat = Lattice::symmetric(1, 8.0, 1.0 / 16.0).unwrap();
        assert!(cover_open_set(&RegionMask::empty(lat), 2).unwrap().is_empty());
    }

    #[test]
    fn pieces_cover_and_are_whitney() {
        let lat = Lattice::symmetric(1, 40.0, 1.0 / 16.0).unwrap();
        let o = RegionMask::from_fn(lat.clone(), |x| (x[0] - 0.3).abs() < 0.9 || (x[0] - 21.0).abs() < 2.5);
        let pieces = cover_open_set(&o, 2).unwrap();
        let mut union = RegionMask::empty(lat.clone());
        for piece in &pieces {
            let back = piece.mask.resample(&lat).unwrap();
            assert!(back.is_subset_of(&o).unwrap());
            union = union.union(&back).unwrap();
            assert!(whitney_check(&piece.mask, 64.0).passed());
        }
        assert_eq!(union, o);
        assert!(pieces.iter().any(|p| matches!(p.key, PieceKey::Label { .. })));
        assert!((pieces.len() as u128) <= cover_piece_bound(1, 2).unwrap());
    }
}
