use serde::{Deserialize, Serialize};

use super::{cube_of, cubes_in_layer_within, family_nonempty, layer_of, layers_meeting, GaussianCube};
use crate::error::{invalid, Result};
use crate::geometry::AxisBox;

/// Position of a `Delta_{0,l}` cube inside its enclosing `Delta_{-kappa,l}`
/// cube, 1-based per axis, with 1 at the lexicographically smallest corner.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeLabel {
    pub components: Vec<u32>,
    pub kappa: u32,
}

impl CubeLabel {
    pub fn new(components: Vec<u32>, kappa: u32) -> Result<Self> {
        if kappa == 0 || kappa > 30 {
            return Err(invalid(format!("label depth kappa must be in 1..=30, got {kappa}")));
        }
        let top = 1u32 << kappa;
        if components.is_empty() || components.iter().any(|&c| c == 0 || c > top) {
            return Err(invalid(format!("label components must lie in 1..={top}")));
        }
        Ok(CubeLabel { components, kappa })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// All `2^{kappa n}` labels in lexicographic order.
    pub fn all(n: usize, kappa: u32) -> impl Iterator<Item = CubeLabel> {
        let side = 1u64 << kappa;
        let total = side.pow(n as u32);
        (0..total).map(move |mut code| {
            let mut components = vec![0u32; n];
            for d in (0..n).rev() {
                components[d] = (code % side) as u32 + 1;
                code /= side;
            }
            CubeLabel { components, kappa }
        })
    }
}

/// Smallest layer at which `kappa`-labels are defined: `ceil((kappa+1)/2)`.
pub fn min_label_layer(kappa: u32) -> u32 {
    kappa.div_ceil(2) + u32::from(kappa % 2 == 0)
}

/// The `kappa`-label of `q`.
pub fn label_of(q: &GaussianCube, kappa: u32) -> Result<CubeLabel> {
    if q.k != 0 {
        return Err(invalid(format!("labels are defined on Delta_(0,l), got k = {}", q.k)));
    }
    if q.l < min_label_layer(kappa) || !family_nonempty(-(kappa as i32), q.l) {
        return Err(invalid(format!("layer {} is below ceil((kappa+1)/2) for kappa = {kappa}", q.l)));
    }
    let side = 1i64 << kappa;
    let components = q.index.iter().map(|i| i.rem_euclid(side) as u32 + 1).collect();
    CubeLabel::new(components, kappa)
}

/// The enclosing cube of `Delta_{-kappa,l}`.
pub fn label_parent(q: &GaussianCube, kappa: u32) -> GaussianCube {
    let side = 1i64 << kappa;
    GaussianCube { k: q.k - kappa as i32, l: q.l, index: q.index.iter().map(|i| i.div_euclid(side)).collect() }
}

/// The union of all cubes of `Delta_{0,l}`, `l >= p+2`, carrying a given
/// `(p+4)`-label, with member enumeration restricted to a truncation window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelClass {
    pub p: u32,
    pub label: CubeLabel,
    pub truncation: AxisBox,
}

impl LabelClass {
    pub fn new(p: u32, label: CubeLabel, truncation: AxisBox) -> Result<Self> {
        if p < 2 {
            return Err(invalid(format!("label classes need p >= 2, got {p}")));
        }
        if label.kappa != p + 4 {
            return Err(invalid(format!("label depth must be p+4 = {}, got {}", p + 4, label.kappa)));
        }
        if label.dim() != truncation.dim() {
            return Err(crate::Error::DimensionMismatch { expected: truncation.dim(), got: label.dim() });
        }
        Ok(LabelClass { p, label, truncation })
    }

    pub fn kappa(&self) -> u32 {
        self.p + 4
    }

    pub fn min_layer(&self) -> u32 {
        self.p + 2
    }

    /// Membership of an arbitrary point (not restricted to the window).
    pub fn contains(&self, x: &[f64]) -> bool {
        if layer_of(x) < self.min_layer() {
            return false;
        }
        let q = cube_of(x, 0).expect("k = 0 families are never empty");
        label_of(&q, self.kappa()).is_ok_and(|lab| lab == self.label)
    }

    /// Member cubes meeting the truncation window, by layer then index.
    pub fn members(&self) -> Vec<GaussianCube> {
        self.members_meeting(&self.truncation)
    }

    /// Member cubes meeting `window` (ignores the stored truncation).
    pub fn members_meeting(&self, window: &AxisBox) -> Vec<GaussianCube> {
        let kappa = self.kappa();
        let side = 1i64 << kappa;
        let mut out = Vec::new();
        for l in layers_meeting(window) {
            if l < self.min_layer() {
                continue;
            }
            for parent in cubes_in_layer_within(-(kappa as i32), l, window) {
                let index =
                    parent.index.iter().zip(&self.label.components).map(|(i, c)| i * side + *c as i64 - 1).collect();
                let q = GaussianCube { k: 0, l, index };
                if q.to_box().intersects(window) {
                    out.push(q);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::cubes_in_layer;

    #[test]
    fn min_layers() {
        assert_eq!(min_label_layer(3), 2);
        assert_eq!(min_label_layer(4), 3);
        assert_eq!(min_label_layer(6), 4);
    }

    #[test]
    fn labels_biject_within_parent() {
        let parent = GaussianCube::new(-3, 2, vec![1, -2]).unwrap();
        let mut labels: Vec<_> = cubes_in_layer(2, 0, 2)
            .filter(|q| label_parent(q, 3) == parent)
            .map(|q| label_of(&q, 3).unwrap())
            .collect();
        assert_eq!(labels.len(), 64);
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 64);
        assert_eq!(labels, CubeLabel::all(2, 3).collect::<Vec<_>>());
    }

    #[test]
    fn figure_pattern_in_layer_two() {
        let target = CubeLabel::new(vec![5, 8], 3).unwrap();
        let hits: Vec<_> = cubes_in_layer(2, 0, 2).filter(|q| label_of(q, 3).unwrap() == target).collect();
        // L_2 has area 48 and each Delta_(-3,2) cube has area 4.
        assert_eq!(hits.len(), 12);
        assert!(hits.iter().all(|q| q.index[0].rem_euclid(8) == 4 && q.index[1].rem_euclid(8) == 7));
    }

    #[test]
    fn labels_are_periodic() {
        for q in cubes_in_layer(1, 0, 4) {
            let shifted = GaussianCube { index: vec![q.index[0] + 8], ..q.clone() };
            if GaussianCube::new(0, 4, shifted.index.clone()).is_ok() {
                assert_eq!(label_of(&q, 3).unwrap(), label_of(&shifted, 3).unwrap());
            }
        }
    }

    #[test]
    fn label_range_is_checked() {
        let q = GaussianCube::new(0, 1, vec![2]).unwrap();
        assert!(label_of(&q, 3).is_err());
        assert!(CubeLabel::new(vec![0], 3).is_err());
        assert!(CubeLabel::new(vec![9], 3).is_err());
    }

    #[test]
    fn class_members_match_brute_force() {
        let w = AxisBox::new(vec![-40.0], vec![70.0]).unwrap();
        let class = LabelClass::new(2, CubeLabel::new(vec![17], 6).unwrap(), w.clone()).unwrap();
        let members = class.members();
        assert!(members.iter().all(|q| q.l >= 4));
        let mut brute = Vec::new();
        for l in 4..=7 {
            brute.extend(cubes_in_layer_within(0, l, &w).filter(|q| label_of(q, 6).unwrap() == class.label));
        }
        assert_eq!(members, brute);
        for q in &members {
            assert!(class.contains(&q.center()));
        }
    }
}
