use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ladder::{stopping_ladder, StoppingLadder};
use super::split::{support_splitter, Piece};
use crate::error::{invalid, Result};
use crate::geometry::{gaussian_measure_box, AdmissibleBall, AxisBox, Point};
use crate::grid::GaussianCube;
use crate::tent::{maximal_function_field, t1q_norm, AtomRecord, NormConfig, SpatialFunction, TentFunction, DEFAULT_RADII};
use crate::whitney::{whitney_partition, PieceKey, WhitneyPartition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    pub norm: NormConfig,
    pub eta: f64,
    pub eta_bar: f64,
    /// Radius mesh size for density sets and the maximal function.
    pub radii: usize,
}

impl DecomposeConfig {
    pub fn new(norm: NormConfig, eta: f64, eta_bar: f64) -> Self {
        DecomposeConfig { norm, eta, eta_bar, radii: DEFAULT_RADII }
    }

    pub fn validate(&self) -> Result<()> {
        self.norm.validate()?;
        if !(self.eta > 0.5 && self.eta < 1.0) {
            return Err(invalid(format!("eta must lie in (1/2, 1), got {}", self.eta)));
        }
        if !(self.eta_bar > 0.0 && self.eta_bar < 1.0) {
            return Err(invalid(format!("eta_bar must lie in (0, 1), got {}", self.eta_bar)));
        }
        if self.radii == 0 {
            return Err(invalid("the radius mesh needs at least one point"));
        }
        Ok(())
    }
}

/// `2 sqrt(n) (rho/2 + (3 rho + 1) / (2 (1 - eta)))`.
pub fn dilation_factor(n: usize, rho: f64, eta: f64) -> f64 {
    2.0 * (n as f64).sqrt() * (0.5 * rho + (3.0 * rho + 1.0) / (2.0 * (1.0 - eta)))
}

/// One `lambda a` of the decomposition with the data that produced it.
#[derive(Clone, Debug)]
pub struct Term {
    pub lambda: f64,
    /// The atom, recorded against the ball circumscribing `Q**`.
    pub atom: AtomRecord,
    pub cube: GaussianCube,
    pub piece: usize,
    pub k: i32,
    pub m: usize,
    pub rho: f64,
    /// The dilation `C` and the box `Q** = C Q`.
    pub dilation: f64,
    pub dilated: AxisBox,
    pub mu: f64,
    pub checks: TermChecks,
}

/// Per-term quantities from the bound on `mu` and the choice of `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermChecks {
    pub cube_measure: f64,
    pub dilated_measure: f64,
    /// `gamma_h(Q**)` over the window.
    pub dilated_lattice_measure: f64,
    /// `int_{F_{k+1} ∩ Q**} (J g)^q dgamma`.
    pub f_integral: f64,
    /// Support pairs with `d(y, complement Q**) < t`.
    pub box_support_violations: usize,
    /// Support pairs with `d(y, complement Q**) < (C/sqrt(n) - rho) diam(Q) / 2`.
    pub dilation_violations: usize,
    /// Support pairs violating `(1-eta) t <= d(y, F_k^[eta_bar]) <= (3 rho + 1)/2 diam(Q)`.
    pub distance_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub piece: usize,
    pub k: i32,
    pub o_measure: f64,
    pub o_density_measure: f64,
    pub cubes: usize,
    pub rho: f64,
    pub fallback: usize,
    /// Cells of `O_k^[eta_bar]` with `M(1_{O_k}) < 1 - eta_bar`.
    pub maximal_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSummary {
    pub key: PieceKey,
    pub k_range: Option<(i32, i32)>,
    pub norm: f64,
    /// `sum_k 2^k gamma(O_k)`.
    pub layer_cake: f64,
    pub uncovered: usize,
    pub nesting_failures: usize,
    pub thickening_violations: usize,
    /// Pairs where the tent indicators of consecutive levels are not nested.
    pub tent_nesting_violations: usize,
    /// Pairs whose `y` is outside every bump of the level it belongs to.
    pub unpartitioned: usize,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub terms: Vec<Term>,
    pub realized_alpha: f64,
    pub sum_lambda: f64,
    pub pieces: Vec<PieceSummary>,
    pub levels: Vec<LevelSummary>,
    pub config: DecomposeConfig,
}

/// Whitney constant of `W + C_16` for the `p = 4` pieces.
pub fn piece_whitney_lambda(n: usize) -> f64 {
    1024.0 * (n as f64).sqrt()
}

pub fn atomic_decompose(f: &TentFunction, cfg: &DecomposeConfig) -> Result<Decomposition> {
    cfg.validate()?;
    if f.is_zero() {
        return Err(invalid("cannot decompose the zero function"));
    }
    let pieces = support_splitter(f)?;
    let parts: Vec<(Vec<Term>, PieceSummary, Vec<LevelSummary>)> =
        pieces.par_iter().enumerate().map(|(i, p)| decompose_piece(i, p, cfg)).collect::<Result<_>>()?;
    let mut out = Decomposition { terms: vec![], realized_alpha: 0.0, sum_lambda: 0.0, pieces: vec![], levels: vec![], config: *cfg };
    for (terms, summary, levels) in parts {
        out.terms.extend(terms);
        out.pieces.push(summary);
        out.levels.extend(levels);
    }
    out.sum_lambda = out.terms.iter().map(|t| t.lambda).sum();
    out.realized_alpha = out.terms.iter().map(|t| t.atom.alpha).fold(0.0, f64::max);
    Ok(out)
}

fn decompose_piece(index: usize, piece: &Piece, cfg: &DecomposeConfig) -> Result<(Vec<Term>, PieceSummary, Vec<LevelSummary>)> {
    let g = &piece.g;
    let grid = g.grid();
    let n = grid.dim();
    let q = cfg.norm.q;
    let ladder = stopping_ladder(g, &cfg.norm, cfg.eta, cfg.eta_bar, cfg.radii)?;
    let lambda_w = piece_whitney_lambda(n);
    let partitions: Vec<Option<WhitneyPartition>> = ladder
        .levels
        .par_iter()
        .map(|lv| if lv.o_density.is_empty() { Ok(None) } else { whitney_partition(&lv.o_density, lambda_w).map(Some) })
        .collect::<Result<_>>()?;
    let fields: Vec<Vec<f64>> = ladder.levels.iter().map(|lv| lv.o_density.complement_distance_field()).collect();
    let t = grid.t_levels();
    let in_tent = |i: usize, j: usize, s: usize| i < fields.len() && (1.0 - cfg.eta) * t[s] <= fields[i][j];

    let mut summary = PieceSummary {
        key: piece.key.clone(),
        k_range: ladder.k_range(),
        norm: ladder.jg.integral(),
        layer_cake: ladder.levels.iter().map(|lv| 2f64.powi(lv.k) * lv.o.weighted_measure(grid.weights())).sum(),
        uncovered: ladder.uncovered,
        nesting_failures: ladder.nesting_failures(),
        thickening_violations: ladder.thickening_violations(&piece.key),
        tent_nesting_violations: 0,
        unpartitioned: 0,
    };

    let mut blocks: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (a, v) in g.entries() {
        let (j, s) = grid.split(a);
        let y = grid.center(j);
        for i in 0..ladder.levels.len() {
            let diff = in_tent(i, j, s) as i32 - in_tent(i + 1, j, s) as i32;
            if diff == 0 {
                continue;
            }
            if diff < 0 {
                summary.tent_nesting_violations += 1;
            }
            let phis = partitions[i].as_ref().map(|p| p.phis(&y)).unwrap_or_default();
            if phis.is_empty() {
                summary.unpartitioned += 1;
            }
            for (m, phi) in phis {
                blocks.entry((i, m)).or_default().push((a, diff as f64 * phi * v));
            }
        }
    }

    let mut terms = Vec::new();
    for ((i, m), entries) in blocks {
        let b = TentFunction::from_entries(grid.clone(), entries)?;
        let mu: f64 = b.entries().map(|(a, v)| v.abs().powf(q) * grid.mass(grid.split(a).0)).sum();
        if mu == 0.0 {
            continue;
        }
        let part = partitions[i].as_ref().expect("blocks only arise on partitioned levels");
        let cube = part.cubes[m].clone();
        let cube_measure = gaussian_measure_box(&cube.to_box()).value;
        let lambda = cube_measure.powf(1.0 / cfg.norm.q_conj()) * mu.powf(1.0 / q);
        let a = b.scale(1.0 / lambda);
        let dilation = dilation_factor(n, part.rho, cfg.eta);
        let dilated = cube.to_box().dilate(dilation);
        let center = cube.center();
        let ball = AdmissibleBall::new(Point::new(center.clone())?, 0.5 * dilation * cube.diameter())?;
        let scale = ball.scale();
        let checks = term_checks(&ladder, i, &fields[i], &a, &cube, &dilated, dilation, part.rho, cfg, cube_measure);
        let atom = AtomRecord::new(ball, scale, a, &cfg.norm)?;
        terms.push(Term { lambda, atom, cube, piece: index, k: ladder.levels[i].k, m, rho: part.rho, dilation, dilated, mu, checks });
    }

    let weights = grid.weights();
    let levels = ladder
        .levels
        .iter()
        .zip(&partitions)
        .map(|(lv, part)| {
            let ind = SpatialFunction::new(grid.clone(), lv.o.cells().iter().map(|&c| c as u8 as f64).collect())?;
            let maximal = if lv.o_density.is_empty() { vec![] } else { maximal_function_field(&ind, cfg.radii) };
            Ok(LevelSummary {
                piece: index,
                k: lv.k,
                o_measure: lv.o.weighted_measure(weights),
                o_density_measure: lv.o_density.weighted_measure(weights),
                cubes: part.as_ref().map_or(0, |p| p.len()),
                rho: part.as_ref().map_or(0.0, |p| p.rho),
                fallback: part.as_ref().map_or(0, |p| p.fallback),
                maximal_violations: lv.o_density.ones().filter(|&x| maximal[x] < 1.0 - cfg.eta_bar - 1e-12).count(),
            })
        })
        .collect::<Result<_>>()?;
    Ok((terms, summary, levels))
}

#[allow(clippy::too_many_arguments)]
fn term_checks(
    ladder: &StoppingLadder,
    i: usize,
    field: &[f64],
    a: &TentFunction,
    cube: &GaussianCube,
    dilated: &AxisBox,
    dilation: f64,
    rho: f64,
    cfg: &DecomposeConfig,
    cube_measure: f64,
) -> TermChecks {
    let grid = a.grid();
    let lattice = grid.lattice();
    let n = grid.dim();
    let q = cfg.norm.q;
    let diam = cube.diameter();
    let next = ladder.levels.get(i + 1).map(|lv| &lv.o);
    let mut f_integral = 0.0;
    let mut dilated_lattice_measure = 0.0;
    for x in 0..grid.cells() {
        if dilated.contains(&lattice.center(x)) {
            dilated_lattice_measure += grid.weights()[x];
            if !next.is_some_and(|o| o.contains_cell(x)) {
                f_integral += ladder.jg.values[x].powf(q) * grid.weights()[x];
            }
        }
    }
    let reach = ((dilation / (n as f64).sqrt()) - rho) * diam / 2.0;
    let far = (3.0 * rho + 1.0) / 2.0 * diam;
    let tol = 1e-12;
    let mut checks = TermChecks {
        cube_measure,
        dilated_measure: gaussian_measure_box(dilated).value,
        dilated_lattice_measure,
        f_integral,
        box_support_violations: 0,
        dilation_violations: 0,
        distance_violations: 0,
    };
    for (idx, _) in a.entries() {
        let (j, s) = grid.split(idx);
        let y = grid.center(j);
        let t = grid.t_levels()[s];
        let d = dilated.distance_to_complement(&y);
        checks.box_support_violations += (d < t) as usize;
        checks.dilation_violations += (d < reach * (1.0 - tol)) as usize;
        let df = field[j];
        checks.distance_violations += ((1.0 - cfg.eta) * t > df * (1.0 + tol) || df > far * (1.0 + tol)) as usize;
    }
    checks
}

/// Cell-wise and per-term checks of a decomposition against its input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub terms: usize,
    pub reconstruction_error: f64,
    pub sum_lambda: f64,
    pub norm: f64,
    pub ratio: f64,
    pub realized_alpha: f64,
    pub support_violations: usize,
    pub ball_support_violations: usize,
    /// Largest `||a||_q gamma(B**)^{1/q'}`.
    pub max_size_ratio: f64,
    /// Largest `mu / (2^{q(k+1)} gamma(Q**))`.
    pub kappa_mu: f64,
    /// Largest `mu / int_{F_{k+1} ∩ Q**} (J g)^q dgamma`.
    pub kappa_mu_f: f64,
    /// Terms with `int_{F_{k+1} ∩ Q**} (J g)^q > 2^{q(k+1)} gamma_h(Q**)`.
    pub f_step_violations: usize,
    pub dilation_violations: usize,
    pub distance_violations: usize,
    /// Largest `(1 - eta_bar) gamma(O_k^[eta_bar]) / gamma(O_k)`.
    pub kappa_m: f64,
    pub maximal_violations: usize,
    /// Extremes of `sum_k 2^k gamma(O_k) / ||g||` over pieces.
    pub layer_cake_min: f64,
    pub layer_cake_max: f64,
    pub uncovered: usize,
    pub nesting_failures: usize,
    pub thickening_violations: usize,
    pub tent_nesting_violations: usize,
    pub unpartitioned: usize,
}

impl DecompositionReport {
    pub fn passed(&self, reconstruction_tol: f64) -> bool {
        self.reconstruction_error <= reconstruction_tol
            && self.support_violations == 0
            && self.ball_support_violations == 0
            && self.f_step_violations == 0
            && self.dilation_violations == 0
            && self.distance_violations == 0
            && self.maximal_violations == 0
            && self.layer_cake_min >= 0.5
            && self.layer_cake_max <= 2.0
            && self.uncovered == 0
            && self.nesting_failures == 0
            && self.thickening_violations == 0
            && self.tent_nesting_violations == 0
            && self.unpartitioned == 0
            && self.kappa_mu.is_finite()
            && self.kappa_m.is_finite()
    }
}

/// `sum lambda a` over the terms.
pub fn reconstruct(d: &Decomposition, grid_of: &TentFunction) -> Result<TentFunction> {
    let entries = d.terms.iter().flat_map(|t| t.atom.f.entries().map(move |(a, v)| (a, t.lambda * v)));
    TentFunction::from_entries(grid_of.grid().clone(), entries)
}

pub fn verify_decomposition(f: &TentFunction, d: &Decomposition) -> Result<DecompositionReport> {
    let q = d.config.norm.q;
    let rebuilt = reconstruct(d, f)?;
    let scale = f.max_abs();
    let reconstruction_error = if scale > 0.0 { rebuilt.max_abs_diff(f)? / scale } else { rebuilt.max_abs() };
    let norm = t1q_norm(f, &d.config.norm, 1.0)?;
    let mut r = DecompositionReport {
        terms: d.terms.len(),
        reconstruction_error,
        sum_lambda: d.sum_lambda,
        norm,
        ratio: d.sum_lambda / norm,
        realized_alpha: d.realized_alpha,
        support_violations: 0,
        ball_support_violations: 0,
        max_size_ratio: 0.0,
        kappa_mu: 0.0,
        kappa_mu_f: 0.0,
        f_step_violations: 0,
        dilation_violations: 0,
        distance_violations: 0,
        kappa_m: 0.0,
        maximal_violations: 0,
        layer_cake_min: f64::INFINITY,
        layer_cake_max: 0.0,
        uncovered: 0,
        nesting_failures: 0,
        thickening_violations: 0,
        tent_nesting_violations: 0,
        unpartitioned: 0,
    };
    for t in &d.terms {
        let c = &t.checks;
        r.support_violations += c.box_support_violations;
        r.ball_support_violations += (!t.atom.support_ok) as usize;
        r.max_size_ratio = r.max_size_ratio.max(t.atom.size_ratio());
        let top = 2f64.powf(q * (t.k + 1) as f64);
        r.kappa_mu = r.kappa_mu.max(t.mu / (top * c.dilated_measure));
        r.kappa_mu_f = r.kappa_mu_f.max(if c.f_integral > 0.0 { t.mu / c.f_integral } else { f64::INFINITY });
        r.f_step_violations += (c.f_integral > top * c.dilated_lattice_measure * (1.0 + 1e-12)) as usize;
        r.dilation_violations += c.dilation_violations;
        r.distance_violations += c.distance_violations;
    }
    for lv in &d.levels {
        if lv.o_measure > 0.0 {
            r.kappa_m = r.kappa_m.max((1.0 - d.config.eta_bar) * lv.o_density_measure / lv.o_measure);
        }
        r.maximal_violations += lv.maximal_violations;
    }
    for p in &d.pieces {
        let lc = p.layer_cake / p.norm;
        r.layer_cake_min = r.layer_cake_min.min(lc);
        r.layer_cake_max = r.layer_cake_max.max(lc);
        r.uncovered += p.uncovered;
        r.nesting_failures += p.nesting_failures;
        r.thickening_violations += p.thickening_violations;
        r.tent_nesting_violations += p.tent_nesting_violations;
        r.unpartitioned += p.unpartitioned;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tent::{DGrid, DGridSpec};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn grid() -> Arc<DGrid> {
        Arc::new(DGrid::new(DGridSpec { n: 1, radius: 4.0, h: 1.0 / 64.0, t_min: 1.0 / 64.0, t_ratio: 2f64.powf(0.25) }).unwrap())
    }

    fn sample(g: &Arc<DGrid>) -> TentFunction {
        TentFunction::from_fn(g.clone(), |y, t| {
            let x = y[0];
            if (-1.6..1.3).contains(&x) {
                (3.0 * x).sin() * (1.0 + x * x) * t.powf(0.3) + 0.2
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn decomposition_reconstructs_and_passes_checks() {
        let g = grid();
        let f = sample(&g);
        let cfg = DecomposeConfig::new(NormConfig::new(2.0).unwrap(), 0.75, 0.7);
        let d = atomic_decompose(&f, &cfg).unwrap();
        let r = verify_decomposition(&f, &d).unwrap();
        assert!(r.passed(1e-9), "{r:#?}");
        assert!(r.terms > 0 && r.ratio.is_finite() && r.ratio > 0.0);
        assert!(d.pieces.len() >= 3);
    }

    #[test]
    fn decomposition_is_positively_homogeneous() {
        let g = grid();
        let f = sample(&g);
        let cfg = DecomposeConfig::new(NormConfig::new(2.0).unwrap(), 0.75, 0.7);
        let d1 = atomic_decompose(&f, &cfg).unwrap();
        let d2 = atomic_decompose(&f.scale(2.0), &cfg).unwrap();
        assert_eq!(d1.terms.len(), d2.terms.len());
        assert_relative_eq!(d2.sum_lambda, 2.0 * d1.sum_lambda, max_relative = 1e-12);
        for (a, b) in d1.terms.iter().zip(&d2.terms) {
            assert_eq!(a.cube, b.cube);
            assert_eq!(a.k + 1, b.k);
            assert_relative_eq!(b.lambda, 2.0 * a.lambda, max_relative = 1e-12);
            assert!(a.atom.f.max_abs_diff(&b.atom.f).unwrap() <= 1e-12 * a.atom.f.max_abs());
        }
    }

    #[test]
    fn zero_function_is_rejected() {
        let cfg = DecomposeConfig::new(NormConfig::new(2.0).unwrap(), 0.75, 0.7);
        assert!(atomic_decompose(&TentFunction::zero(grid()), &cfg).is_err());
        let bad = DecomposeConfig { eta: 0.4, ..cfg };
        assert!(atomic_decompose(&sample(&grid()), &bad).is_err());
    }
}
