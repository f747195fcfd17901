use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use gtent::atomic::{aperture_compare, atomic_decompose, verify_decomposition, DecomposeConfig};
use gtent::config::SessionConfig;
use gtent::geometry::{distance, gaussian_measure_ball, AdmissibleBall, AxisBox, Point};
use gtent::grid::{cubes_in_layer, layer_cube_count, GaussianCube};
use gtent::lattice::{Lattice, RegionMask};
use gtent::suites::{piece_union, run_suite, sample_function, Check, Session, SuiteReport, SUITES};
use gtent::tent::{apply_j, t1q_norm};
use gtent::whitney::{cover_open_set, cover_piece_bound, whitney_check, whitney_partition, PieceKey};
use gtent::Error;

const EXIT_CHECKS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

/// Gaussian Whitney coverings and tent-space decompositions.
#[derive(Parser)]
#[command(name = "gtent", version)]
struct Cli {
    /// Session config (TOML); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate Gaussian dyadic cubes of Delta_{k,l}.
    Grid {
        #[arg(long, default_value_t = 0)]
        k: i32,
        /// First layer.
        #[arg(long, default_value_t = 0)]
        from: u32,
        /// Last layer (inclusive).
        #[arg(long, default_value_t = 3)]
        to: u32,
    },
    /// Cover an open set by thickened cubes and label classes.
    Cover(SetArgs),
    /// Whitney partition of unity of an open set.
    Partition(SetArgs),
    /// Square function and tent norm of a random tent function.
    TentNorm {
        /// Random function stream.
        #[arg(long, default_value_t = 0)]
        function: u32,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Atomic decomposition of a random tent function.
    Decompose {
        #[arg(long, default_value_t = 0)]
        function: u32,
    },
    /// Norms at two apertures for a batch of random functions.
    Aperture {
        #[arg(long, default_value_t = 20)]
        count: u32,
    },
    /// Gaussian measure of one ball to the configured tolerance.
    Measure {
        /// Comma-separated centre coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long)]
        radius: f64,
    },
    /// Run the property suites.
    VerifyAll {
        /// Comma-separated suite ids (all when absent).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

#[derive(Args)]
struct SetArgs {
    /// `ball:<c1,...,cn>:<r>` or `box:<c1,...,cn>:<half side>`; repeatable.
    #[arg(long = "shape")]
    shapes: Vec<String>,
    /// Half-width of the lattice window.
    #[arg(long)]
    window: Option<f64>,
    #[arg(long, default_value_t = 2)]
    p: u32,
}

enum Failure {
    Checks(Vec<String>),
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks(failed)) => {
            for f in failed {
                eprintln!("FAILED {f}");
            }
            ExitCode::from(EXIT_CHECKS)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::ToleranceUnreachable { .. } => EXIT_TOLERANCE,
                Error::NotWhitney { .. } => EXIT_CHECKS,
                _ => EXIT_USAGE,
            })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let mut cfg = match &cli.config {
        Some(path) => SessionConfig::load(path)?,
        None => SessionConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Grid { k, from, to } => grid(&cfg, out, k, from, to),
        Command::Cover(args) => cover(&cfg, out, &args),
        Command::Partition(args) => partition(&cfg, out, &args),
        Command::TentNorm { function, alpha } => tent_norm(cfg, out, function, alpha),
        Command::Decompose { function } => decompose(cfg, out, function),
        Command::Aperture { count } => aperture(cfg, out, count),
        Command::Measure { center, radius } => measure(&cfg, out, center, radius),
        Command::VerifyAll { only } => verify_all(cfg, out, &only),
    }
}

fn write_json(out: &Path, name: &str, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(out.join(name), text + "\n")?;
    Ok(())
}

fn write_csv(out: &Path, name: &str, seed: u64, header: &[&str], rows: &[Vec<f64>]) -> Outcome {
    let mut buf = format!("# seed={seed}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| Failure::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.flush()?;
    }
    fs::write(out.join(name), buf)?;
    Ok(())
}

/// Fails with the given names when any is present.
fn require(failed: Vec<String>) -> Outcome {
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(failed))
    }
}

fn grid(cfg: &SessionConfig, out: &Path, k: i32, from: u32, to: u32) -> Outcome {
    let n = cfg.n;
    let mut layers = Vec::new();
    let mut failed = Vec::new();
    let mut drawn: Vec<GaussianCube> = Vec::new();
    for l in from..=to {
        let formula = layer_cube_count(n, k, l);
        let listed = formula.is_some_and(|c| c <= 1 << 16);
        let cubes: Vec<GaussianCube> = if listed { cubes_in_layer(n, k, l).collect() } else { vec![] };
        if listed && formula != Some(cubes.len() as u128) {
            failed.push(format!("layer {l}: enumeration {} differs from the closed form {formula:?}", cubes.len()));
        }
        layers.push(json!({
            "l": l,
            "count": formula.map(|c| c.to_string()),
            "cubes": listed.then(|| cubes.iter().map(|q| q.index.clone()).collect::<Vec<_>>()),
        }));
        drawn.extend(cubes);
    }
    write_json(out, "grid.json", &json!({ "seed": cfg.seed, "n": n, "k": k, "layers": layers }))?;
    if n == 2 {
        let extent = 2f64.powi(to as i32);
        let mut svg = Svg::new(extent);
        for q in &drawn {
            svg.rect(&q.lower(), &q.upper(), "none", "#333");
        }
        fs::write(out.join("grid.svg"), svg.finish())?;
    }
    require(failed)
}

fn parse_shape(text: &str, n: usize) -> Result<(bool, Vec<f64>, f64), Failure> {
    let bad = || Failure::Lib(Error::InvalidArgument(format!("bad shape '{text}'")));
    let parts: Vec<&str> = text.split(':').collect();
    let [kind, centre, size] = parts[..] else { return Err(bad()) };
    let round = match kind {
        "ball" => true,
        "box" => false,
        _ => return Err(bad()),
    };
    let c: Vec<f64> = centre.split(',').map(|v| v.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let r: f64 = size.trim().parse().map_err(|_| bad())?;
    if c.len() != n || !(r > 0.0) {
        return Err(bad());
    }
    Ok((round, c, r))
}

/// The open set described by the shape arguments, on the session lattice.
fn open_set(cfg: &SessionConfig, args: &SetArgs) -> Result<RegionMask, Failure> {
    let n = cfg.n;
    let defaults: Vec<String> = if n == 1 {
        vec!["ball:0.5:1.5".into(), "ball:-4:0.7".into()]
    } else {
        vec!["ball:0.5,0.5:1.5".into(), "box:-3,2:0.6".into()]
    };
    let texts = if args.shapes.is_empty() { &defaults } else { &args.shapes };
    let shapes = texts.iter().map(|s| parse_shape(s, n)).collect::<Result<Vec<_>, _>>()?;
    let window = args.window.unwrap_or(if n == 1 { 16.0 } else { 8.0 });
    let h = if n == 1 { cfg.h() } else { cfg.h().max(1.0 / 32.0) };
    let lat = Lattice::symmetric(n, window, h)?;
    let mask = RegionMask::from_fn(lat, |x| {
        shapes.iter().any(|(round, c, r)| {
            if *round {
                distance(x, c) < *r
            } else {
                x.iter().zip(c).all(|(a, b)| (a - b).abs() < *r)
            }
        })
    });
    if mask.count() == 0 {
        return Err(Failure::Lib(Error::InvalidArgument("the open set has no cells".into())));
    }
    Ok(mask)
}

fn cover(cfg: &SessionConfig, out: &Path, args: &SetArgs) -> Outcome {
    let o = open_set(cfg, args)?;
    let pieces = cover_open_set(&o, args.p)?;
    let n = cfg.n;
    let lambda = 2f64.powi(2 * args.p as i32 + 2) * (n as f64).sqrt();
    let lat = o.lattice();
    let union = piece_union(lat, &pieces);
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for piece in &pieces {
        let cert = whitney_check(&piece.mask, lambda);
        if !cert.passed() {
            failed.push(format!("piece {:?}: {} Whitney violations", piece.key, cert.violations));
        }
        rows.push(json!({ "key": piece.key, "cells": piece.mask.count(), "max_ratio": cert.max_ratio, "violations": cert.violations }));
    }
    if union.cells() != o.cells() {
        failed.push("the pieces do not union to the set".into());
    }
    let bound = cover_piece_bound(n, args.p);
    if bound.is_some_and(|b| pieces.len() as u128 > b) {
        failed.push(format!("{} pieces exceed the bound", pieces.len()));
    }
    let report = json!({
        "seed": cfg.seed,
        "n": n,
        "p": args.p,
        "h": lat.h(),
        "cells": o.count(),
        "lambda": lambda,
        "bound": bound.map(|b| b.to_string()),
        "pieces": rows,
    });
    write_json(out, "cover.json", &report)?;
    if n == 2 {
        let mut svg = Svg::new(lat.window().upper[0]);
        svg.mask(&o, "#9ecae1");
        for piece in &pieces {
            let colour = match piece.key {
                PieceKey::Cube { .. } => "#d62728",
                PieceKey::Label { .. } => "#2ca02c",
            };
            let w = piece.mask.lattice().window();
            svg.rect(&w.lower, &w.upper, "none", colour);
        }
        fs::write(out.join("cover.svg"), svg.finish())?;
    }
    require(failed)
}

fn partition(cfg: &SessionConfig, out: &Path, args: &SetArgs) -> Outcome {
    let o = open_set(cfg, args)?;
    let n = cfg.n;
    let part = whitney_partition(&o, 64.0 * (n as f64).sqrt())?;
    let check = part.check(&o, part.rho, cfg.samples.partition_points, cfg.seed);
    let report = json!({
        "seed": cfg.seed,
        "n": n,
        "h": o.h(),
        "rho": part.rho,
        "fallback": part.fallback,
        "check": check,
        "cubes": part.cubes.iter().zip(&part.distances).map(|(q, d)| json!({
            "k": q.k, "l": q.l, "index": q.index, "distance": d,
        })).collect::<Vec<_>>(),
    });
    write_json(out, "partition.json", &report)?;
    let lat = part.lattice();
    let mut header = vec!["cell"];
    let names: Vec<String> = (0..n).map(|d| format!("x{d}")).collect();
    header.extend(names.iter().map(String::as_str));
    header.extend(["pieces", "phi_sum"]);
    let rows: Vec<Vec<f64>> = o
        .ones()
        .map(|i| {
            let x = lat.center(i);
            let phis = part.phis(&x);
            let mut row = vec![i as f64];
            row.extend(&x);
            row.push(phis.len() as f64);
            row.push(phis.iter().map(|(_, v)| v).sum());
            row
        })
        .collect();
    write_csv(out, "partition.csv", cfg.seed, &header, &rows)?;
    if n == 2 {
        let mut svg = Svg::new(lat.window().upper[0]);
        svg.mask(&o, "#c7e9c0");
        for q in &part.cubes {
            svg.rect(&q.lower(), &q.upper(), "none", "#333");
        }
        fs::write(out.join("partition.svg"), svg.finish())?;
    }
    let mut failed = Vec::new();
    if !check.passed(cfg.tolerances.partition_sum) {
        failed.push(format!("partition properties: {check:?}"));
    }
    require(failed)
}

fn tent_norm(cfg: SessionConfig, out: &Path, function: u32, alpha: f64) -> Outcome {
    let session = Session::new(cfg)?;
    let f = sample_function(&session, function, true)?;
    let norm = session.norm(session.config.q)?;
    let j = apply_j(&f, &norm, alpha)?;
    let total = t1q_norm(&f, &norm, alpha)?;
    let lat = session.grid.lattice();
    let n = session.config.n;
    let mut header = vec!["cell"];
    let names: Vec<String> = (0..n).map(|d| format!("x{d}")).collect();
    header.extend(names.iter().map(String::as_str));
    header.push("jf");
    let rows: Vec<Vec<f64>> = (0..lat.len())
        .filter(|&i| j.values[i] > 0.0)
        .map(|i| {
            let mut row = vec![i as f64];
            row.extend(lat.center(i));
            row.push(j.values[i]);
            row
        })
        .collect();
    write_csv(out, "tent-norm.csv", session.config.seed, &header, &rows)?;
    let report = json!({
        "seed": session.config.seed,
        "function": function,
        "q": session.config.q,
        "alpha": alpha,
        "nnz": f.nnz(),
        "norm": total,
        "max_jf": j.max(),
    });
    write_json(out, "tent-norm.json", &report)
}

fn decompose(cfg: SessionConfig, out: &Path, function: u32) -> Outcome {
    let session = Session::new(cfg)?;
    let c = &session.config;
    let f = sample_function(&session, function, true)?;
    let mut dcfg = DecomposeConfig::new(session.norm(c.q)?, c.eta, session.calibration.eta_bar);
    dcfg.radii = c.radii;
    let d = atomic_decompose(&f, &dcfg)?;
    let report = verify_decomposition(&f, &d)?;
    let terms: Vec<Value> = d
        .terms
        .iter()
        .map(|t| {
            json!({
                "lambda": t.lambda,
                "k": t.k,
                "m": t.m,
                "piece": t.piece,
                "cube": t.cube,
                "rho": t.rho,
                "mu": t.mu,
                "ball": { "center": t.atom.ball.center.coords(), "radius": t.atom.ball.radius },
                "alpha": t.atom.alpha,
                "atom_norm": t.atom.lq_norm,
                "atom_bound": t.atom.bound,
                "support_ok": t.atom.support_ok,
            })
        })
        .collect();
    let body = json!({
        "seed": c.seed,
        "function": function,
        "q": c.q,
        "eta": c.eta,
        "eta_bar": session.calibration.eta_bar,
        "terms": terms,
        "report": report,
    });
    write_json(out, "decompose.json", &body)?;
    let mut failed = Vec::new();
    if !report.passed(c.tolerances.reconstruction) {
        failed.push(format!("decomposition checks: {report:?}"));
    }
    require(failed)
}

fn aperture(cfg: SessionConfig, out: &Path, count: u32) -> Outcome {
    let session = Session::new(cfg)?;
    let c = &session.config;
    let norm = session.norm(c.q)?;
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for i in 0..count {
        let f = sample_function(&session, 2000 + i, true)?;
        let r = aperture_compare(&f, c.alpha0, c.alpha, &norm)?;
        if r.norm_alpha < r.norm_alpha0 {
            failed.push(format!("function {i}: norm decreases with the aperture"));
        }
        rows.push(vec![i as f64, r.alpha0, r.alpha, r.norm_alpha0, r.norm_alpha, r.ratio, r.majorant, r.doubling]);
    }
    let header = ["function", "alpha0", "alpha", "norm_alpha0", "norm_alpha", "ratio", "majorant", "doubling"];
    write_csv(out, "aperture.csv", c.seed, &header, &rows)?;
    require(failed)
}

fn measure(cfg: &SessionConfig, out: &Path, center: Vec<f64>, radius: f64) -> Outcome {
    let ball = AdmissibleBall::new(Point::new(center)?, radius)?;
    let est = gaussian_measure_ball(&ball, cfg.tolerances.ball)?;
    let body = json!({
        "seed": cfg.seed,
        "center": ball.center.coords(),
        "radius": radius,
        "scale": ball.scale(),
        "tolerance": cfg.tolerances.ball,
        "estimate": est,
    });
    write_json(out, "measure.json", &body)
}

fn verify_all(cfg: SessionConfig, out: &Path, only: &[u32]) -> Outcome {
    let session = Session::new(cfg)?;
    let mut reports: Vec<SuiteReport> = Vec::new();
    for (id, _) in SUITES {
        if only.is_empty() || only.contains(&id) {
            reports.push(run_suite(id, &session)?);
        }
    }
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures().map(move |c: &Check| format!("suite {} ({}): {} = {} (limit {})", r.id, r.name, c.name, c.value, c.limit)))
        .collect();
    let body = json!({
        "seed": session.config.seed,
        "config": session.config,
        "eta_bar": session.calibration,
        "passed": failed.is_empty(),
        "suites": reports,
    });
    write_json(out, "verify-all.json", &body)?;
    for r in &reports {
        println!("{} suite {:>2} {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.name);
    }
    require(failed)
}

/// Minimal self-contained SVG of a square window `[-extent, extent]^2`.
struct Svg {
    extent: f64,
    body: String,
}

impl Svg {
    const SIZE: f64 = 800.0;

    fn new(extent: f64) -> Self {
        Svg { extent, body: String::new() }
    }

    fn px(&self, v: f64) -> f64 {
        (v + self.extent) / (2.0 * self.extent) * Self::SIZE
    }

    fn rect(&mut self, lo: &[f64], hi: &[f64], fill: &str, stroke: &str) {
        let (x, w) = (self.px(lo[0]), self.px(hi[0]) - self.px(lo[0]));
        // SVG y grows downwards.
        let (y, h) = (self.px(-hi[1]), self.px(-lo[1]) - self.px(-hi[1]));
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}" stroke="{stroke}" stroke-width="0.3"/>"#
        );
    }

    /// Set cells drawn as merged horizontal runs.
    fn mask(&mut self, m: &RegionMask, fill: &str) {
        let lat = m.lattice();
        let h = lat.h();
        let window: AxisBox = lat.window();
        let cols = lat.dims()[0];
        for row in 0..lat.dims()[1] {
            let mut start = None;
            for col in 0..=cols {
                let set = col < cols && m.contains_cell(col * lat.dims()[1] + row);
                match (set, start) {
                    (true, None) => start = Some(col),
                    (false, Some(s)) => {
                        let lo = [window.lower[0] + s as f64 * h, window.lower[1] + row as f64 * h];
                        let hi = [window.lower[0] + col as f64 * h, lo[1] + h];
                        self.rect(&lo, &hi, fill, "none");
                        start = None;
                    }
                    _ => {}
                }
            }
        }
    }

    fn finish(self) -> String {
        let s = Self::SIZE;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n<rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}
