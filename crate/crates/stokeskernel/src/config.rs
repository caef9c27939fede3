//! Kernel/experiment configuration and the flat `key = value` config format.

use crate::error::{Error, Result};
use crate::special::unit_sphere_area;
use std::fmt::Write as _;
use std::path::Path;

/// Heat-kernel normalization.
///
/// `Standard` is `(4 pi t)^{-n/2} exp(-|x|^2 / 4t)`, the one whose time
/// integral reproduces the Laplace fundamental solution exactly and the
/// crate default. `Paper` is the variance-`t` Gaussian
/// `(2 pi t)^{-n/2} exp(-|x|^2 / 2t)`, retained for literal formula checks;
/// its time integral carries a systematic factor 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatNorm {
    Paper,
    Standard,
}

impl HeatNorm {
    /// Scale `a` in `Gamma = (a pi t)^{-n/2} exp(-|x|^2 / (a t))`.
    pub fn scale(self) -> f64 {
        match self {
            HeatNorm::Standard => 4.0,
            HeatNorm::Paper => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeatNorm::Paper => "paper",
            HeatNorm::Standard => "standard",
        }
    }
}

/// Evaluation configuration: dimension, normalization, quadrature tolerances,
/// truncation, data support, and the grids the experiments sweep over.
#[derive(Clone, Debug)]
pub struct KernelConfig {
    pub n: usize,
    pub heat_norm: HeatNorm,
    pub tol_space: f64,
    pub tol_time: f64,
    pub trunc_radius: f64,
    /// Support radius `M` of the boundary data.
    pub support_radius: f64,
    pub r0: f64,
    pub r_min: f64,
    pub xn_grid: Vec<f64>,
    pub t_cap: f64,
    pub horizon: f64,
    pub mollify_tau: Vec<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            n: 3,
            heat_norm: HeatNorm::Standard,
            tol_space: 1e-6,
            tol_time: 1e-6,
            trunc_radius: 8.0,
            support_radius: 1.0,
            r0: 0.5,
            r_min: 1e-4,
            xn_grid: vec![0.1, 0.01, 0.001],
            t_cap: 50.0,
            horizon: 1.5,
            mollify_tau: vec![0.1, 0.03, 0.01],
        }
    }
}

impl KernelConfig {
    /// Default configuration in dimension `n`.
    pub fn with_dim(n: usize) -> Self {
        KernelConfig {
            n,
            ..KernelConfig::default()
        }
    }

    /// Surface area of the unit sphere in R^n.
    pub fn omega_n(&self) -> f64 {
        unit_sphere_area(self.n)
    }

    /// Plane dimension `n - 1`.
    pub fn plane_dim(&self) -> usize {
        self.n - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        for (name, v) in [
            ("tol_space", self.tol_space),
            ("tol_time", self.tol_time),
            ("trunc_radius", self.trunc_radius),
            ("M", self.support_radius),
            ("r0", self.r0),
            ("r_min", self.r_min),
            ("t_cap", self.t_cap),
            ("horizon", self.horizon),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.trunc_radius < 4.0 * self.support_radius {
            return Err(Error::Config(format!(
                "trunc_radius = {} violates trunc_radius >= 4*M = {}",
                self.trunc_radius,
                4.0 * self.support_radius
            )));
        }
        if self.r0 > 1.0 {
            return Err(Error::Config(format!("r0 must lie in (0, 1], got {}", self.r0)));
        }
        if self.r_min >= self.r0 {
            return Err(Error::Config(format!(
                "r_min = {} must be below r0 = {}",
                self.r_min, self.r0
            )));
        }
        if self.xn_grid.is_empty() || self.xn_grid.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("xn_grid must be a nonempty list of positive reals".into()));
        }
        Ok(())
    }

    /// Parse the flat `key = value` format. Unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = KernelConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::Config(format!("line {}: bad {what} `{value}`", lineno + 1));
            match key {
                "n" => cfg.n = value.parse().map_err(|_| bad("integer"))?,
                "heat_norm" => {
                    cfg.heat_norm = match value {
                        "paper" => HeatNorm::Paper,
                        "standard" => HeatNorm::Standard,
                        _ => return Err(bad("heat_norm (paper|standard)")),
                    }
                }
                "tol_space" => cfg.tol_space = value.parse().map_err(|_| bad("real"))?,
                "tol_time" => cfg.tol_time = value.parse().map_err(|_| bad("real"))?,
                "trunc_radius" => cfg.trunc_radius = value.parse().map_err(|_| bad("real"))?,
                "M" => cfg.support_radius = value.parse().map_err(|_| bad("real"))?,
                "r0" => cfg.r0 = value.parse().map_err(|_| bad("real"))?,
                "r_min" => cfg.r_min = value.parse().map_err(|_| bad("real"))?,
                "xn_grid" => cfg.xn_grid = parse_list(value).map_err(|_| bad("comma list"))?,
                "t_cap" => cfg.t_cap = value.parse().map_err(|_| bad("real"))?,
                "horizon" => cfg.horizon = value.parse().map_err(|_| bad("real"))?,
                "mollify_tau" => cfg.mollify_tau = parse_list(value).map_err(|_| bad("comma list"))?,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Canonical echo of the full configuration, suitable for reproducing a run.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "heat_norm = {}", self.heat_norm.as_str());
        let _ = writeln!(s, "tol_space = {:e}", self.tol_space);
        let _ = writeln!(s, "tol_time = {:e}", self.tol_time);
        let _ = writeln!(s, "trunc_radius = {}", self.trunc_radius);
        let _ = writeln!(s, "M = {}", self.support_radius);
        let _ = writeln!(s, "r0 = {}", self.r0);
        let _ = writeln!(s, "r_min = {:e}", self.r_min);
        let _ = writeln!(s, "xn_grid = {}", join_list(&self.xn_grid));
        let _ = writeln!(s, "t_cap = {}", self.t_cap);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "mollify_tau = {}", join_list(&self.mollify_tau));
        s
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    value
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect()
}

fn join_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
# comment
n = 2
heat_norm = paper
tol_space = 1e-5
M = 1.5
trunc_radius = 6.0
xn_grid = 0.1, 0.05
mollify_tau = 0.2,0.1
";
        let cfg = KernelConfig::parse(text).unwrap();
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.heat_norm, HeatNorm::Paper);
        assert_eq!(cfg.xn_grid, vec![0.1, 0.05]);
        assert_eq!(cfg.support_radius, 1.5);
    }

    #[test]
    fn unknown_key_is_error() {
        assert!(KernelConfig::parse("frobnicate = 1\n").is_err());
    }

    #[test]
    fn violated_truncation_invariant_is_error() {
        assert!(KernelConfig::parse("M = 3.0\n").is_err()); // default trunc_radius 8 < 12
    }

    #[test]
    fn echo_round_trips() {
        let cfg = KernelConfig::default();
        let again = KernelConfig::parse(&cfg.echo()).unwrap();
        assert_eq!(again.echo(), cfg.echo());
    }
}
