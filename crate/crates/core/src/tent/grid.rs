use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{admissibility_radius, ball_measure};
use crate::lattice::Lattice;

/// Parameters of a discretisation of `D = {(y,t): t < m(y)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DGridSpec {
    pub n: usize,
    /// Half-width of the spatial window `[-R, R)^n`.
    pub radius: f64,
    pub h: f64,
    pub t_min: f64,
    pub t_ratio: f64,
}

/// Spatial cells of side `h` times geometric `t`-levels. Level `s` stands for
/// `[t_min r^s, t_min r^{s+1})` with midpoint `t_s = t_min r^{s+1/2}` and
/// weight `ln r` for `dt/t`. The pair `(j, s)` is active when `t_s < m(y_j)`;
/// active pairs are numbered cell-major.
#[derive(Debug)]
pub struct DGrid {
    spec: DGridSpec,
    lattice: Lattice,
    weights: Vec<f64>,
    t: Vec<f64>,
    log_weight: f64,
    offsets: Vec<u32>,
    balls: Vec<OnceLock<f64>>,
}

impl DGrid {
    pub fn new(spec: DGridSpec) -> Result<Self> {
        if spec.n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(spec.t_min > 0.0 && spec.t_min < 1.0) {
            return Err(invalid(format!("t_min must lie in (0,1), got {}", spec.t_min)));
        }
        if !(spec.t_ratio > 1.0) {
            return Err(invalid(format!("t ratio must exceed 1, got {}", spec.t_ratio)));
        }
        let lattice = Lattice::symmetric(spec.n, spec.radius, spec.h)?;
        let levels = ((1.0 / spec.t_min).ln() / spec.t_ratio.ln()).round().max(1.0) as usize;
        let t: Vec<f64> = (0..levels).map(|s| spec.t_min * spec.t_ratio.powf(s as f64 + 0.5)).collect();
        let mut offsets = Vec::with_capacity(lattice.len() + 1);
        offsets.push(0u32);
        let mut buf = vec![0.0; spec.n];
        let mut total = 0u64;
        for j in 0..lattice.len() {
            lattice.center_into(j, &mut buf);
            let m = admissibility_radius(&buf);
            total += t.partition_point(|&ts| ts < m) as u64;
            if total > u32::MAX as u64 {
                return Err(invalid("too many active cells"));
            }
            offsets.push(total as u32);
        }
        let weights = lattice.cell_measures();
        let balls = (0..total).map(|_| OnceLock::new()).collect();
        Ok(DGrid { log_weight: spec.t_ratio.ln(), spec, lattice, weights, t, offsets, balls })
    }

    pub fn spec(&self) -> &DGridSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn cells(&self) -> usize {
        self.lattice.len()
    }

    /// `gamma` of every spatial cell.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn t_levels(&self) -> &[f64] {
        &self.t
    }

    /// `ln r`, the `dt/t` weight of one level.
    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn active_len(&self) -> usize {
        *self.offsets.last().unwrap() as usize
    }

    /// Number of active levels over cell `j`.
    pub fn levels_at(&self, j: usize) -> usize {
        (self.offsets[j + 1] - self.offsets[j]) as usize
    }

    pub fn active_index(&self, j: usize, s: usize) -> Option<usize> {
        (s < self.levels_at(j)).then(|| self.offsets[j] as usize + s)
    }

    /// `(cell, level)` of an active index.
    pub fn split(&self, a: usize) -> (usize, usize) {
        let j = self.offsets.partition_point(|&o| o as usize <= a) - 1;
        (j, a - self.offsets[j] as usize)
    }

    pub fn center(&self, j: usize) -> Vec<f64> {
        self.lattice.center(j)
    }

    /// `gamma(cell_j) ln r`, the `dgamma dt/t` mass of an active pair.
    pub fn mass(&self, j: usize) -> f64 {
        self.weights[j] * self.log_weight
    }

    /// `gamma(B(y_j, t_s))` for an active index, computed once and cached.
    pub fn ball(&self, a: usize) -> f64 {
        *self.balls[a].get_or_init(|| {
            let (j, s) = self.split(a);
            ball_measure(&self.lattice.center(j), self.t[s])
        })
    }

    /// `gamma(B(y_j, factor t_s))`, uncached unless `factor == 1`.
    pub fn ball_scaled(&self, a: usize, factor: f64) -> f64 {
        if factor == 1.0 {
            return self.ball(a);
        }
        let (j, s) = self.split(a);
        ball_measure(&self.lattice.center(j), factor * self.t[s])
    }

    /// Lattice measure `gamma_h(B(c, r))`: the cells whose centres lie in the ball.
    pub fn lattice_ball(&self, c: &[f64], r: f64) -> f64 {
        let mut total = 0.0;
        self.lattice.for_each_ball_row(c, r, |start, len| total += self.weights[start..start + len].iter().sum::<f64>());
        total
    }
}
