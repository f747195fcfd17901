//! Session configuration, read from and written to TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute tolerance for Gaussian ball measures.
    pub ball: f64,
    /// Allowed excess of an atom's norm over 1.
    pub atom_norm: f64,
    /// Relative slack for the steps of the atom norm chain.
    pub holder: f64,
    /// Relative reconstruction error of decompositions.
    pub reconstruction: f64,
    /// `|sum phi - 1|` for partitions of unity.
    pub partition_sum: f64,
    /// Largest ratio between `sum lambda / ||f||` values across runs.
    pub lambda_envelope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ball: 1e-10, atom_norm: 0.05, holder: 1e-9, reconstruction: 1e-9, partition_sum: 1e-9, lambda_envelope: 3.0 }
    }
}

/// Sample counts for the verification suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    pub transfer: usize,
    pub layers: usize,
    pub masks: usize,
    pub partition_points: usize,
    pub atoms: usize,
    pub decompositions: usize,
    pub density: usize,
    pub aperture: usize,
    pub oracle_balls: usize,
    pub eta_calibration: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Samples {
            transfer: 1_000_000,
            layers: 100_000,
            masks: 20,
            partition_points: 10_000,
            atoms: 20,
            decompositions: 10,
            density: 50,
            aperture: 20,
            oracle_balls: 50,
            eta_calibration: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub n: usize,
    pub q: f64,
    /// Lattice side; defaults to `2^-8` for `n = 1` and `2^-6` otherwise.
    pub h: Option<f64>,
    pub t_min: f64,
    pub t_ratio: f64,
    /// Half-width of the spatial window for tent functions.
    pub radius: f64,
    pub p: u32,
    /// Label depth; defaults to `p + 4`.
    pub kappa: Option<u32>,
    pub eta: f64,
    /// Calibrated from sampled balls when absent.
    pub eta_bar: Option<f64>,
    pub alpha0: f64,
    pub alpha: f64,
    /// Radius mesh size for density sets and the maximal function.
    pub radii: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub samples: Samples,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            n: 1,
            q: 2.0,
            h: None,
            t_min: 1.0 / 256.0,
            t_ratio: 2f64.powf(0.25),
            radius: 6.0,
            p: 2,
            kappa: None,
            eta: 0.75,
            eta_bar: None,
            alpha0: 1.5,
            alpha: 3.0,
            radii: 32,
            seed: 1,
            tolerances: Tolerances::default(),
            samples: Samples::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SessionConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn h(&self) -> f64 {
        self.h.unwrap_or(if self.n == 1 { 1.0 / 256.0 } else { 1.0 / 64.0 })
    }

    pub fn kappa(&self) -> u32 {
        self.kappa.unwrap_or(self.p + 4)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.n) {
            return Err(bad(format!("n must lie in 1..=12, got {}", self.n)));
        }
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(bad(format!("q must lie in (1, inf), got {}", self.q)));
        }
        let h = self.h();
        if !(h > 0.0 && h <= 0.5 && h.log2().fract() == 0.0) {
            return Err(bad(format!("h must be a power of two at most 1/2, got {h}")));
        }
        if !(self.t_min > 0.0 && self.t_min < 1.0) || !(self.t_ratio > 1.0) {
            return Err(bad("need 0 < t_min < 1 and t_ratio > 1"));
        }
        if !(self.radius >= 1.0) || (self.radius / h).fract() != 0.0 {
            return Err(bad("radius must be at least 1 and a multiple of h"));
        }
        if self.p < 1 {
            return Err(bad("p must be at least 1"));
        }
        if self.kappa() < self.p + 4 {
            return Err(bad("kappa must be at least p + 4"));
        }
        if !(self.eta > 0.5 && self.eta < 1.0) {
            return Err(bad(format!("eta must lie in (1/2, 1), got {}", self.eta)));
        }
        if self.eta_bar.is_some_and(|e| !(e > 0.0 && e < 1.0)) {
            return Err(bad("eta_bar must lie in (0, 1)"));
        }
        if !(self.alpha0 > 1.0 && self.alpha > self.alpha0) {
            return Err(bad("need 1 < alpha0 < alpha"));
        }
        if self.radii == 0 {
            return Err(bad("radii must be positive"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("ball", t.ball),
            ("atom_norm", t.atom_norm),
            ("holder", t.holder),
            ("reconstruction", t.reconstruction),
            ("partition_sum", t.partition_sum),
            ("lambda_envelope", t.lambda_envelope),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_losslessly() {
        let mut cfg = SessionConfig { eta_bar: Some(0.71234567890123), h: Some(1.0 / 128.0), ..Default::default() };
        cfg.tolerances.ball = 3.3e-11;
        let text = cfg.to_toml();
        assert_eq!(SessionConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(SessionConfig::from_toml(&SessionConfig::default().to_toml()).unwrap(), SessionConfig::default());
    }

    #[test]
    fn defaults_and_overrides() {
        let cfg = SessionConfig::from_toml("n = 2\np = 4\n").unwrap();
        assert_eq!(cfg.h(), 1.0 / 64.0);
        assert_eq!(cfg.kappa(), 8);
        assert_eq!(SessionConfig::default().h(), 1.0 / 256.0);
    }

    #[test]
    fn rejects_malformed_input() {
        for text in ["n = 0", "q = 1.0", "h = 0.3", "bogus = 1", "eta = 0.2", "kappa = 3", "[tolerances]\nball = -1.0", "n = "] {
            assert!(matches!(SessionConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
        assert!(matches!(SessionConfig::load(Path::new("/nonexistent/gtent.toml")), Err(Error::Config(_))));
    }
}
