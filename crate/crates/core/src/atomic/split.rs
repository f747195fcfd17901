use std::collections::BTreeMap;

use crate::error::Result;
use crate::geometry::{box_distance, AxisBox};
use crate::grid::{cube_of, label_of, CubeLabel, LabelClass};
use crate::tent::TentFunction;
use crate::whitney::PieceKey;

/// Largest layer whose `Delta_{0,l}` cubes are pieces of their own; beyond it
/// cubes are grouped by their 8-label.
pub const SPLIT_MAX_LAYER: u32 = 5;
/// Label depth for the grouped layers.
pub const SPLIT_KAPPA: u32 = 8;

#[derive(Clone, Debug)]
pub struct Piece {
    pub key: PieceKey,
    pub g: TentFunction,
}

/// The piece key of the base set containing `y`.
pub fn piece_key(y: &[f64]) -> Result<PieceKey> {
    let q = cube_of(y, 0)?;
    if q.l <= SPLIT_MAX_LAYER {
        Ok(PieceKey::Cube { cube: q })
    } else {
        Ok(PieceKey::Label { label: label_of(&q, SPLIT_KAPPA)? })
    }
}

/// Splits `f` into `f 1_{W ∩ {Jf > 0}}(y)` over the base sets `W`, ordered by key.
///
/// Every `y_j` carrying a value lies in its own ball `B(y_j, t_s)`, so
/// `{Jf > 0}` contains the whole `y`-support and the indicator is not
/// evaluated (in the far tails the cell weights underflow and would hide it).
pub fn support_splitter(f: &TentFunction) -> Result<Vec<Piece>> {
    let grid = f.grid();
    let mut groups: BTreeMap<PieceKey, Vec<(usize, f64)>> = BTreeMap::new();
    for (a, v) in f.entries() {
        let (j, _) = grid.split(a);
        groups.entry(piece_key(&grid.center(j))?).or_default().push((a, v));
    }
    groups
        .into_iter()
        .map(|(key, entries)| Ok(Piece { key, g: TentFunction::from_entries(grid.clone(), entries)? }))
        .collect()
}

/// Distance from `x` to the base set of `key`, searching label members within
/// `reach` only (farther members report infinity).
pub fn base_distance(key: &PieceKey, x: &[f64], reach: f64) -> f64 {
    match key {
        PieceKey::Cube { cube } => box_distance(&cube.lower(), &cube.upper(), x),
        PieceKey::Label { label } => {
            let window = AxisBox { lower: x.iter().map(|v| v - reach).collect(), upper: x.iter().map(|v| v + reach).collect() };
            label_class(label, window.clone())
                .members()
                .iter()
                .map(|q| box_distance(&q.lower(), &q.upper(), x))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

fn label_class(label: &CubeLabel, truncation: AxisBox) -> LabelClass {
    LabelClass::new(SPLIT_KAPPA - 4, label.clone(), truncation).expect("split labels have depth p + 4")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tent::{DGrid, DGridSpec};
    use std::sync::Arc;

    fn grid(n: usize, radius: f64, h: f64) -> Arc<DGrid> {
        Arc::new(DGrid::new(DGridSpec { n, radius, h, t_min: 1.0 / 64.0, t_ratio: 2f64.sqrt() }).unwrap())
    }

    #[test]
    fn zero_function_has_no_pieces() {
        assert!(support_splitter(&TentFunction::zero(grid(1, 4.0, 1.0 / 64.0))).unwrap().is_empty());
    }

    #[test]
    fn pieces_are_disjoint_and_sum_to_f() {
        let g = grid(1, 80.0, 1.0 / 32.0);
        let f = TentFunction::from_fn(g.clone(), |y, t| (y[0] * 0.7).sin() + t).unwrap();
        let pieces = support_splitter(&f).unwrap();
        let mut total = TentFunction::zero(g.clone());
        let mut seen = std::collections::HashSet::new();
        for p in &pieces {
            for (a, _) in p.g.entries() {
                assert!(seen.insert(a));
            }
            total = total.add(&p.g).unwrap();
        }
        assert_eq!(total.max_abs_diff(&f).unwrap(), 0.0);
        assert!(pieces.iter().any(|p| matches!(p.key, PieceKey::Label { .. })));
    }

    #[test]
    fn support_in_l0_gives_the_unit_cubes() {
        let g = grid(2, 2.0, 1.0 / 16.0);
        let f = TentFunction::from_fn(g, |y, _| if y[0].abs() < 1.0 && y[1].abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let keys: Vec<PieceKey> = support_splitter(&f).unwrap().into_iter().map(|p| p.key).collect();
        assert_eq!(keys.len(), 4);
        for key in keys {
            let PieceKey::Cube { cube } = key else { panic!("expected a cube") };
            assert_eq!((cube.k, cube.l), (0, 0));
        }
    }

    #[test]
    fn base_distance_for_labels_finds_nearby_members() {
        let y = [70.3];
        let key = piece_key(&y).unwrap();
        assert!(matches!(key, PieceKey::Label { .. }));
        assert_eq!(base_distance(&key, &y, 1.0), 0.0);
        let d = base_distance(&key, &[70.3 + 1.0 / 64.0], 4.0);
        assert!(d < 0.02);
    }
}
