//! Points, admissible balls, axis boxes and Gaussian measures.
//!
//! The admissibility function `m(x) = min(1, 1/|x|)` uses the Euclidean norm;
//! the sup-norm only enters through the layer structure in [`crate::grid`].

mod ball;
mod doubling;
pub mod normal;

use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{invalid, Error, Result};

pub use ball::{ball_measure, gaussian_measure_ball, gaussian_measure_box, MeasureEstimate, MeasureMethod};
pub use doubling::{DEFAULT_CENTER_WINDOW, doubling_prime_sample, doubling_ratio_sample, doubling_ratio_sample_in, sample_gaussian_center};

/// A point of R^n with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("a point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn origin(n: usize) -> Self {
        Point(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<&[f64]> for Point {
    type Error = Error;
    fn try_from(value: &[f64]) -> Result<Self> {
        Point::new(value.to_vec())
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `m(x) = min{1, 1/|x|}`, the largest radius of a scale-1 admissible ball at `x`.
pub fn admissibility_radius(x: &[f64]) -> f64 {
    let r = norm(x);
    if r <= 1.0 {
        1.0
    } else {
        1.0 / r
    }
}

/// Open Euclidean ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleBall {
    pub center: Point,
    pub radius: f64,
}

impl AdmissibleBall {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius must be positive and finite, got {radius}")));
        }
        Ok(AdmissibleBall { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `radius / m(center)`: the smallest alpha with the ball in `B_alpha`.
    pub fn scale(&self) -> f64 {
        self.radius / admissibility_radius(&self.center)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(&self.center, x) < self.radius
    }
}

/// Whether `ball` is admissible at scale `alpha`, i.e. `r <= alpha m(c)`.
pub fn is_admissible(ball: &AdmissibleBall, alpha: f64) -> bool {
    ball.radius <= alpha * admissibility_radius(&ball.center)
}

/// Half-open product of intervals `[lower_i, upper_i)`. Infinite bounds are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(invalid("box needs at least one axis"));
        }
        if lower.iter().zip(&upper).any(|(a, b)| a.is_nan() || b.is_nan() || a >= b) {
            return Err(invalid("box needs lower_i < upper_i on every axis"));
        }
        Ok(AxisBox { lower, upper })
    }

    /// `[-r, r)^n`
    pub fn symmetric(n: usize, r: f64) -> Result<Self> {
        AxisBox::new(vec![-r; n], vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lower.iter().zip(&self.upper).zip(x).all(|((a, b), v)| *a <= *v && *v < *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diameter(&self) -> f64 {
        let d: Vec<f64> = self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).collect();
        norm(&d)
    }

    /// Euclidean distance from `x` to the closed box.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        box_distance(&self.lower, &self.upper, x)
    }

    /// Euclidean distance from an interior point to the complement of the box
    /// (0 for points outside).
    pub fn distance_to_complement(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(x)
            .fold(f64::INFINITY, |acc, ((a, b), v)| acc.min(v - a).min(b - v))
    }

    pub fn is_subset_of(&self, other: &AxisBox) -> bool {
        self.lower.iter().zip(&other.lower).all(|(a, b)| a >= b)
            && self.upper.iter().zip(&other.upper).all(|(a, b)| a <= b)
    }

    pub fn intersects(&self, other: &AxisBox) -> bool {
        (0..self.dim()).all(|i| self.lower[i] < other.upper[i] && other.lower[i] < self.upper[i])
    }

    /// Box with the same centre and every side multiplied by `factor`.
    pub fn dilate(&self, factor: f64) -> AxisBox {
        let c = self.center();
        let lower = (0..self.dim()).map(|i| c[i] - 0.5 * factor * (self.upper[i] - self.lower[i])).collect();
        let upper = (0..self.dim()).map(|i| c[i] + 0.5 * factor * (self.upper[i] - self.lower[i])).collect();
        AxisBox { lower, upper }
    }
}

pub(crate) fn box_distance(lower: &[f64], upper: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        let d = if x[i] < lower[i] {
            lower[i] - x[i]
        } else if x[i] > upper[i] {
            x[i] - upper[i]
        } else {
            0.0
        };
        s += d * d;
    }
    s.sqrt()
}
