use rand::Rng;
use rayon::prelude::*;

use super::{Check, Session, SuiteReport};
use crate::atomic::{aperture_compare, atomic_decompose, grid_doubling_constant, verify_decomposition, DecomposeConfig};
use crate::error::Result;
use crate::geometry::{admissibility_radius, distance, doubling_ratio_sample, AdmissibleBall, Point};
use crate::lattice::RegionMask;
use crate::tent::{holder_chain, make_atom, t1q_norm, verify_density_averaging, TentFunction};

/// A random bump of the form `a (1 - |y - c|^2 / w^2)_+ (t / m(y))^e (1 - t / m(y))^d`.
struct Bump {
    c: Vec<f64>,
    w: f64,
    a: f64,
    e: f64,
    d: f64,
}

fn random_bumps<R: Rng + ?Sized>(rng: &mut R, n: usize, reach: f64, signed: bool) -> Vec<Bump> {
    (0..rng.random_range(1..=3))
        .map(|_| Bump {
            c: (0..n).map(|_| reach * (2.0 * rng.random::<f64>() - 1.0)).collect(),
            w: 0.2 + 0.6 * rng.random::<f64>(),
            a: (0.5 + 1.5 * rng.random::<f64>()) * if signed && rng.random::<bool>() { -1.0 } else { 1.0 },
            e: 2.0 * rng.random::<f64>(),
            d: rng.random_range(0..=2) as f64,
        })
        .collect()
}

fn bump_function(session: &Session, bumps: &[Bump]) -> Result<TentFunction> {
    TentFunction::from_fn(session.grid.clone(), |y, t| {
        let s = t / admissibility_radius(y);
        bumps
            .iter()
            .map(|b| {
                let u = distance(y, &b.c) / b.w;
                if u < 1.0 {
                    b.a * (1.0 - u * u) * s.powf(b.e) * (1.0 - s).powf(b.d)
                } else {
                    0.0
                }
            })
            .sum()
    })
}

/// Random nonzero function supported well inside the window.
fn random_function<R: Rng + ?Sized>(session: &Session, rng: &mut R, signed: bool) -> Result<TentFunction> {
    let reach = 0.5 * session.config.radius - 0.5;
    loop {
        let f = bump_function(session, &random_bumps(rng, session.config.n, reach, signed))?;
        if !f.is_zero() {
            return Ok(f);
        }
    }
}

/// The random function the CLI uses for stream `stream`.
pub fn sample_function(session: &Session, stream: u32, signed: bool) -> Result<TentFunction> {
    random_function(session, &mut session.rng(stream), signed)
}

/// Atoms built from random profiles meet the norm bound through the lattice
/// version of the Hölder chain.
pub fn atom_suite(session: &Session) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(7, super::SUITES[6].1);
    let mut rng = session.rng(700);
    let n = session.config.n;
    let reach = 0.5 * session.config.radius;
    let mut specs = Vec::new();
    for i in 0..session.config.samples.atoms {
        let q = [1.5, 2.0, 3.0][i % 3];
        let c: Vec<f64> = (0..n).map(|_| reach * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let alpha = 0.5 + rng.random::<f64>();
        let r = alpha * admissibility_radius(&c) * (0.3 + 0.7 * rng.random::<f64>());
        let phase = std::f64::consts::TAU * rng.random::<f64>();
        let freq = 1.0 + 6.0 * rng.random::<f64>();
        let e = 2.0 * rng.random::<f64>();
        specs.push((q, c, alpha, r, phase, freq, e));
    }
    let results = specs
        .par_iter()
        .map(|(q, c, alpha, r, phase, freq, e)| {
            let cfg = session.norm(*q)?;
            let profile = TentFunction::from_fn(session.grid.clone(), |y, t| {
                if r - distance(y, c) >= t {
                    (1.0 + 0.5 * (freq * y[0] + phase).sin()) * (t / r).powf(*e)
                } else {
                    0.0
                }
            })?;
            let ball = AdmissibleBall::new(Point::new(c.clone())?, *r)?;
            let atom = make_atom(ball, *alpha, &profile, &cfg)?;
            let norm = t1q_norm(&atom.f, &cfg, 1.0)?;
            let chain = holder_chain(&atom, &cfg)?;
            Ok((norm, chain))
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = &session.config.tolerances;
    let worst = results.iter().map(|(v, _)| *v).fold(0.0, f64::max);
    let broken = results.iter().filter(|(_, c)| !c.holds(tol.holder)).count();
    let lattice = results.iter().map(|(_, c)| c.lattice_factor).fold(0.0, f64::max);
    report.check(Check::at_most(format!("largest atom norm ({} atoms)", results.len()), worst, 1.0 + tol.atom_norm));
    report.check(Check::zero("atoms with a broken norm chain", broken));
    report.constant("max_atom_norm", worst);
    report.constant("max_lattice_factor", lattice);
    Ok(report)
}

/// Atomic decompositions of random functions.
pub fn decomposition_suite(session: &Session) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(8, super::SUITES[7].1);
    let mut rng = session.rng(800);
    let cfgs = &session.config;
    let mut dcfg = DecomposeConfig::new(session.norm(cfgs.q)?, cfgs.eta, session.calibration.eta_bar);
    dcfg.radii = cfgs.radii;
    let fs: Vec<TentFunction> =
        (0..cfgs.samples.decompositions).map(|_| random_function(session, &mut rng, true)).collect::<Result<_>>()?;
    let mut reports = Vec::new();
    for f in &fs {
        let d = atomic_decompose(f, &dcfg)?;
        reports.push(verify_decomposition(f, &d)?);
    }
    let tol = &cfgs.tolerances;
    let max = |g: fn(&crate::atomic::DecompositionReport) -> f64| reports.iter().map(g).fold(0.0, f64::max);
    let sum = |g: fn(&crate::atomic::DecompositionReport) -> usize| reports.iter().map(g).sum::<usize>();
    report.check(Check::at_most(
        format!("max relative reconstruction error ({} runs)", reports.len()),
        max(|r| r.reconstruction_error),
        tol.reconstruction,
    ));
    report.check(Check::zero("atom values outside T_1(Q**)", sum(|r| r.support_violations)));
    report.check(Check::zero("atom values outside the tent of the recorded ball", sum(|r| r.ball_support_violations)));
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    report.check(Check::at_most("non-finite sum lambda / ||f||", ratios.iter().filter(|r| !r.is_finite()).count() as f64, 0.0));
    report.check(Check::at_most("envelope of sum lambda / ||f||", hi / lo, tol.lambda_envelope));
    let kappa = max(|r| r.kappa_mu);
    report.check(Check::at_most("session mu constant (finite)", kappa, f64::MAX));
    report.check(Check::zero("terms above 2^{q(k+1)} gamma_h(Q**) in the F-step", sum(|r| r.f_step_violations)));
    report.check(Check::zero("dilation violations", sum(|r| r.dilation_violations)));
    report.check(Check::zero("distance inequality violations", sum(|r| r.distance_violations)));
    report.check(Check::zero("maximal function violations", sum(|r| r.maximal_violations)));
    report.check(Check::zero("uncovered pairs", sum(|r| r.uncovered)));
    report.check(Check::zero("unpartitioned pairs", sum(|r| r.unpartitioned)));
    report.check(Check::zero("tent nesting violations", sum(|r| r.tent_nesting_violations)));
    report.check(Check::at_most("layer cake / norm", max(|r| r.layer_cake_max), 2.0));
    report.check(Check::at_least(
        "layer cake / norm (min)",
        reports.iter().map(|r| r.layer_cake_min).fold(f64::INFINITY, f64::min),
        0.5,
    ));
    report.constant("ratio_min", lo);
    report.constant("ratio_max", hi);
    report.constant("kappa_mu", kappa);
    report.constant("kappa_mu_f", max(|r| r.kappa_mu_f));
    report.constant("kappa_m", max(|r| r.kappa_m));
    report.constant("realized_alpha", max(|r| r.realized_alpha));
    report.constant("max_size_ratio", max(|r| r.max_size_ratio));
    report.constant("eta_bar", session.calibration.eta_bar);
    report.constant("terms", sum(|r| r.terms) as f64);
    Ok(report)
}

/// Density averaging for random sets and nonnegative functions.
pub fn density_suite(session: &Session) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(9, super::SUITES[8].1);
    let mut rng = session.rng(900);
    let cfg = &session.config;
    let n = cfg.n;
    let reach = 0.5 * cfg.radius;
    let mut cases = Vec::new();
    for _ in 0..cfg.samples.density {
        let shapes: Vec<(Vec<f64>, f64)> = (0..rng.random_range(1..=3))
            .map(|_| ((0..n).map(|_| reach * (2.0 * rng.random::<f64>() - 1.0)).collect(), 0.1 + 1.4 * rng.random::<f64>()))
            .collect();
        let f = RegionMask::from_fn(session.grid.lattice().clone(), |x| shapes.iter().any(|(c, r)| distance(x, c) < *r));
        let h = random_function(session, &mut rng, false)?;
        cases.push((f, h));
    }
    let results = cases
        .par_iter()
        .map(|(f, h)| verify_density_averaging(f, h, cfg.eta, session.calibration.eta_bar, cfg.radii))
        .collect::<Result<Vec<_>>>()?;
    let tested: Vec<_> = results.iter().filter(|r| r.tested > 0).collect();
    let c_prime = tested.iter().map(|r| r.c_prime).fold(f64::INFINITY, f64::min);
    let kappa = 1.0 / c_prime;
    let above = results.iter().filter(|r| r.lhs > kappa * r.rhs * (1.0 + 1e-12)).count();
    // The a-priori constant: the calibration margin over the doubling
    // constant comparing B(y, t) with B(x, t), |x - y| < (1 - eta) t.
    let doubling = doubling_ratio_sample(n, 1.5, 1.0, cfg.samples.eta_calibration, cfg.seed);
    let predicted = session.calibration.c / doubling;
    report.check(Check::at_least(format!("session c' over {} runs with tested pairs", tested.len()), c_prime, f64::MIN_POSITIVE));
    report.check(Check::zero("runs with lhs > kappa' rhs", above));
    report.check(Check::at_least("measured c' against the calibrated lower bound", c_prime, predicted));
    report.constant("c_prime", c_prime);
    report.constant("c_prime_predicted", predicted);
    report.constant("kappa_prime", kappa);
    report.constant("max_ratio", results.iter().map(|r| r.ratio).fold(0.0, f64::max));
    report.constant("eta_bar", session.calibration.eta_bar);
    report.constant("tested_pairs", results.iter().map(|r| r.tested).sum::<usize>() as f64);
    Ok(report)
}

/// Change of aperture on random functions.
pub fn aperture_suite(session: &Session) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(10, super::SUITES[9].1);
    let mut rng = session.rng(1000);
    let cfg = &session.config;
    let norm = session.norm(cfg.q)?;
    let fs: Vec<TentFunction> =
        (0..cfg.samples.aperture).map(|_| random_function(session, &mut rng, true)).collect::<Result<_>>()?;
    let kappa = grid_doubling_constant(&session.grid, cfg.alpha, cfg.q);
    let reports = fs.iter().map(|f| aperture_compare(f, cfg.alpha0, cfg.alpha, &norm)).collect::<Result<Vec<_>>>()?;
    let decreasing = reports.iter().filter(|r| r.norm_alpha < r.norm_alpha0).count();
    let above = reports.iter().filter(|r| r.norm_alpha > kappa * r.majorant * (1.0 + 1e-12)).count();
    let envelope = reports.iter().map(|r| r.ratio).fold(0.0, f64::max);
    report.check(Check::zero(format!("runs with a smaller norm at the larger aperture ({})", reports.len()), decreasing));
    report.check(Check::zero("runs above kappa'' times the dilated majorant", above));
    report.check(Check::at_most("ratio envelope (finite)", envelope, f64::MAX));
    report.constant("kappa_doubling", kappa);
    report.constant("ratio_envelope", envelope);
    report.constant("ratio_min", reports.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min));
    report.constant("majorant_ratio_max", reports.iter().map(|r| r.norm_alpha / r.majorant).fold(0.0, f64::max));
    Ok(report)
}
