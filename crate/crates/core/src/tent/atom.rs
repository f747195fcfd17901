use serde::{Deserialize, Serialize};

use super::{j_power, lq_norm_d, t1q_norm, NormConfig, TentFunction};
use crate::error::{invalid, Result};
use crate::geometry::{ball_measure, distance, AdmissibleBall};

/// A tent function together with the ball it is meant to be an atom for.
#[derive(Clone, Debug)]
pub struct AtomRecord {
    pub ball: AdmissibleBall,
    pub alpha: f64,
    pub f: TentFunction,
    /// `f` vanishes outside `T_1(B)`.
    pub support_ok: bool,
    pub lq_norm: f64,
    /// `gamma(B)^{-1/q'}`.
    pub bound: f64,
}

impl AtomRecord {
    /// Records `f` against `ball` without rescaling.
    pub fn new(ball: AdmissibleBall, alpha: f64, f: TentFunction, cfg: &NormConfig) -> Result<Self> {
        cfg.validate()?;
        if ball.dim() != f.grid().dim() {
            return Err(crate::Error::DimensionMismatch { expected: f.grid().dim(), got: ball.dim() });
        }
        let support_ok = supported_in_tent(&f, &ball);
        let measure = ball_measure(ball.center.coords(), ball.radius);
        let bound = measure.powf(-1.0 / cfg.q_conj());
        let lq_norm = lq_norm_d(&f, cfg.q);
        Ok(AtomRecord { ball, alpha, f, support_ok, lq_norm, bound })
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.support_ok && self.ball.scale() <= self.alpha * (1.0 + 1e-12) && self.lq_norm <= self.bound * (1.0 + tol)
    }

    /// `lq_norm / bound`, the factor by which the size condition is missed.
    pub fn size_ratio(&self) -> f64 {
        self.lq_norm / self.bound
    }
}

/// Every active pair carrying a value satisfies `d(y, complement B) >= t`.
pub(crate) fn supported_in_tent(f: &TentFunction, ball: &AdmissibleBall) -> bool {
    let grid = f.grid();
    let c = ball.center.coords();
    f.entries().all(|(a, _)| {
        let (j, s) = grid.split(a);
        ball.radius - distance(&grid.center(j), c) >= grid.t_levels()[s]
    })
}

/// Rescales `profile` so that `||a||_{L^q(D)} = gamma(B)^{-1/q'}`.
pub fn make_atom(ball: AdmissibleBall, alpha: f64, profile: &TentFunction, cfg: &NormConfig) -> Result<AtomRecord> {
    if ball.scale() > alpha * (1.0 + 1e-12) {
        return Err(invalid(format!("ball has scale {} above {alpha}", ball.scale())));
    }
    if profile.is_zero() {
        return Err(invalid("atom profile is zero"));
    }
    if !supported_in_tent(profile, &ball) {
        return Err(invalid("atom profile is supported outside the tent over the ball"));
    }
    let raw = AtomRecord::new(ball, alpha, profile.clone(), cfg)?;
    let f = profile.scale(raw.bound / raw.lq_norm);
    AtomRecord::new(raw.ball, alpha, f, cfg)
}

pub fn verify_atom_norm(a: &AtomRecord, cfg: &NormConfig) -> Result<f64> {
    t1q_norm(&a.f, cfg, 1.0)
}

/// The chain bounding the norm of an atom, evaluated with lattice sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderChain {
    /// `int J a dgamma` over the whole window.
    pub norm: f64,
    /// The same integral restricted to cells in `B`.
    pub inside: f64,
    /// `(int_B (J a)^q dgamma)^{1/q} gamma_h(B)^{1/q'}`.
    pub holder: f64,
    /// The previous line with the `x`-integral moved inside:
    /// `(sum gamma_h(B(y,t)) / gamma(B(y,t)) |a|^q dgamma dt/t)^{1/q} gamma_h(B)^{1/q'}`.
    pub fubini: f64,
    /// `||a||_{L^q(D)} gamma(B)^{1/q'}`, at most 1 for an atom.
    pub size: f64,
    /// `(max gamma_h(B(y,t)) / gamma(B(y,t)))^{1/q} (gamma_h(B) / gamma(B))^{1/q'}`.
    pub lattice_factor: f64,
}

impl HolderChain {
    /// Every step holds up to relative `slack`.
    pub fn holds(&self, slack: f64) -> bool {
        let le = |a: f64, b: f64| a <= b * (1.0 + slack) + f64::MIN_POSITIVE;
        let eq = |a: f64, b: f64| (a - b).abs() <= slack * a.abs().max(b.abs());
        eq(self.norm, self.inside) && le(self.inside, self.holder) && eq(self.holder, self.fubini) && le(self.fubini, self.size * self.lattice_factor)
    }
}

pub fn holder_chain(a: &AtomRecord, cfg: &NormConfig) -> Result<HolderChain> {
    cfg.validate()?;
    let grid = a.f.grid();
    let (q, qc) = (cfg.q, cfg.q_conj());
    let c = a.ball.center.coords();
    let power = j_power(&a.f, q, 1.0, 1.0);
    let w = grid.weights();
    let mut norm = 0.0;
    let mut inside = 0.0;
    let mut inside_power = 0.0;
    let mut ball_h = 0.0;
    for x in 0..grid.cells() {
        let g = power[x].powf(1.0 / q);
        norm += g * w[x];
        if distance(&grid.center(x), c) < a.ball.radius {
            inside += g * w[x];
            inside_power += power[x] * w[x];
            ball_h += w[x];
        }
    }
    let mut moved = 0.0;
    let mut worst = 0.0f64;
    for (idx, v) in a.f.entries() {
        let (j, s) = grid.split(idx);
        let ratio = grid.lattice_ball(&grid.center(j), grid.t_levels()[s]) / grid.ball(idx);
        worst = worst.max(ratio);
        moved += ratio * v.abs().powf(q) * grid.mass(j);
    }
    let ball = ball_measure(c, a.ball.radius);
    Ok(HolderChain {
        norm,
        inside,
        holder: inside_power.powf(1.0 / q) * ball_h.powf(1.0 / qc),
        fubini: moved.powf(1.0 / q) * ball_h.powf(1.0 / qc),
        size: a.lq_norm * ball.powf(1.0 / qc),
        lattice_factor: worst.powf(1.0 / q) * (ball_h / ball).powf(1.0 / qc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::tent::{DGrid, DGridSpec};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn grid() -> Arc<DGrid> {
        Arc::new(DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 256.0, t_min: 1.0 / 64.0, t_ratio: 2f64.powf(0.25) }).unwrap())
    }

    fn ball(c: f64, r: f64) -> AdmissibleBall {
        AdmissibleBall::new(Point::new(vec![c]).unwrap(), r).unwrap()
    }

    fn tent_profile(g: &Arc<DGrid>, b: &AdmissibleBall) -> TentFunction {
        let c = b.center.coords()[0];
        let r = b.radius;
        TentFunction::from_fn(g.clone(), |y, t| if r - (y[0] - c).abs() >= t { 1.0 + y[0] } else { 0.0 }).unwrap()
    }

    #[test]
    fn make_atom_normalises_and_checks_support() {
        let g = grid();
        let cfg = NormConfig::new(2.0).unwrap();
        let b = ball(0.3, 0.5);
        let a = make_atom(b.clone(), 1.0, &tent_profile(&g, &b), &cfg).unwrap();
        assert!(a.is_valid(1e-12));
        assert_relative_eq!(a.lq_norm, a.bound, max_relative = 1e-12);
        let wide = TentFunction::from_fn(g, |_, _| 1.0).unwrap();
        assert!(make_atom(b, 1.0, &wide, &cfg).is_err());
        assert!(make_atom(ball(0.0, 2.0), 1.0, &tent_profile(&grid(), &ball(0.0, 2.0)), &cfg).is_err());
    }

    #[test]
    fn atom_norm_is_at_most_one_up_to_the_lattice() {
        let g = grid();
        for (c, r, q) in [(0.0, 0.5, 2.0), (1.5, 0.6, 1.5), (-2.5, 0.35, 3.0)] {
            let cfg = NormConfig::new(q).unwrap();
            let b = ball(c, r);
            let a = make_atom(b.clone(), 1.5, &tent_profile(&g, &b), &cfg).unwrap();
            let norm = verify_atom_norm(&a, &cfg).unwrap();
            let chain = holder_chain(&a, &cfg).unwrap();
            assert!(chain.holds(1e-9), "{chain:?}");
            assert_relative_eq!(chain.norm, norm, max_relative = 1e-12);
            assert!(norm <= chain.lattice_factor * (1.0 + 1e-9));
            assert!(norm <= 1.05, "norm {norm}");
        }
    }

    #[test]
    fn doubling_the_atom_doubles_its_norm() {
        let g = grid();
        let cfg = NormConfig::new(2.0).unwrap();
        let b = ball(0.5, 0.4);
        let a = make_atom(b.clone(), 1.0, &tent_profile(&g, &b), &cfg).unwrap();
        let twice = t1q_norm(&a.f.scale(2.0), &cfg, 1.0).unwrap();
        assert_relative_eq!(twice, 2.0 * verify_atom_norm(&a, &cfg).unwrap(), max_relative = 1e-12);
    }
}
