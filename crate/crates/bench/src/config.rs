//! Experiment configuration: defaults, `key = value` files and typed overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use slse_core::schedule::RatioOrientation;
use slse_core::sketch::SketchKind;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    SlseFrs,
    MIhs,
    Pcg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::SlseFrs, SolverKind::MIhs, SolverKind::Pcg];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::SlseFrs => "slse-frs",
            SolverKind::MIhs => "m-ihs",
            SolverKind::Pcg => "pcg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slse-frs" | "slse" => Ok(SolverKind::SlseFrs),
            "m-ihs" | "mihs" => Ok(SolverKind::MIhs),
            "pcg" => Ok(SolverKind::Pcg),
            other => Err(format!("unknown solver '{other}' (expected slse-frs, m-ihs or pcg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StopMode {
    /// Stop at `target_factor · Δ_OLS` using the known true parameter.
    Oracle,
    /// Stop on the relative normal-equation residual.
    Residual,
    /// Always run `t_max` iterations.
    Fixed,
}

impl FromStr for StopMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "oracle" => Ok(StopMode::Oracle),
            "residual" => Ok(StopMode::Residual),
            "fixed" => Ok(StopMode::Fixed),
            other => Err(format!("unknown stop mode '{other}' (expected oracle, residual or fixed)")),
        }
    }
}

/// Iteration counts for the sketched subproblems.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ItersSpec {
    List(Vec<usize>),
    LowerBound,
}

impl FromStr for ItersSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("bound") || s.eq_ignore_ascii_case("theorem4") {
            return Ok(ItersSpec::LowerBound);
        }
        let list = parse_list(s, parse_count)?;
        if list.is_empty() {
            return Err("empty iteration list".into());
        }
        Ok(ItersSpec::List(list))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    /// `η = d/r`, `μ = (1 − η)²`.
    Practical,
    /// `μ = 1`, `η = 53/36 − √17/3`.
    Theorem,
}

impl FromStr for ParamMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "practical" => Ok(ParamMode::Practical),
            "theorem" => Ok(ParamMode::Theorem),
            other => Err(format!("unknown parameter mode '{other}' (expected practical or theorem)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub kappa: f64,
    pub sigma2: f64,
    pub seed: u64,
    pub trials: usize,
    pub solvers: Vec<SolverKind>,
    #[serde(serialize_with = "serialize_display")]
    pub sketch: SketchKind,
    pub omega: f64,
    pub ai: ItersSpec,
    pub r_mult: f64,
    pub m1_mult: usize,
    pub sizes: Option<Vec<usize>>,
    pub t_max: usize,
    pub stop: StopMode,
    pub tol: f64,
    /// Targets are `target_factor · Δ_OLS` for both the oracle stop and time-to-target.
    pub target_factor: f64,
    pub params: ParamMode,
    #[serde(serialize_with = "serialize_orientation")]
    pub orientation: RatioOrientation,
    pub reset_momentum: bool,
    pub wall_clock: bool,
    pub memory_cap_mb: usize,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
}

fn serialize_display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn serialize_orientation<S: serde::Serializer>(o: &RatioOrientation, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match o {
        RatioOrientation::Growing => "growing",
        RatioOrientation::Shrinking => "shrinking",
    })
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 1 << 14,
            d: 1 << 6,
            kappa: 1e4,
            sigma2: 1e-8,
            seed: 0,
            trials: 10,
            solvers: SolverKind::ALL.to_vec(),
            sketch: SketchKind::Srht,
            omega: 0.5,
            ai: ItersSpec::List(vec![2]),
            r_mult: 6.0,
            m1_mult: 8,
            sizes: None,
            t_max: 100,
            stop: StopMode::Oracle,
            tol: 1e-10,
            target_factor: 2.0,
            params: ParamMode::Practical,
            orientation: RatioOrientation::Growing,
            reset_momentum: true,
            wall_clock: true,
            memory_cap_mb: 8192,
            out_csv: None,
            out_json: None,
            out_svg: None,
        }
    }
}

/// Accepts plain integers and powers of two written as `2^k`.
pub fn parse_count(s: &str) -> std::result::Result<usize, String> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("2^") {
        let k: u32 = exp.trim().parse().map_err(|_| format!("bad exponent in '{s}'"))?;
        return 1usize.checked_shl(k).ok_or_else(|| format!("'{s}' overflows"));
    }
    s.parse().map_err(|_| format!("expected a non-negative integer, got '{s}'"))
}

/// Accepts decimal reals and `2^-k` style powers of two.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("2^") {
        let k: i32 = exp.trim().parse().map_err(|_| format!("bad exponent in '{s}'"))?;
        return Ok(2f64.powi(k));
    }
    s.parse().map_err(|_| format!("expected a number, got '{s}'"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("expected a boolean, got '{other}'")),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(item).collect()
}

impl ExperimentConfig {
    /// Set one field from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let bad = |msg: String| BenchError::Config(format!("{key}: {msg}"));
        let v = value.trim();
        match key.as_str() {
            "n" => self.n = parse_count(v).map_err(bad)?,
            "d" => self.d = parse_count(v).map_err(bad)?,
            "cond" | "kappa" => self.kappa = parse_real(v).map_err(bad)?,
            "sigma2" => self.sigma2 = parse_real(v).map_err(bad)?,
            "seed" => self.seed = v.parse().map_err(|_| bad(format!("expected an unsigned integer, got '{v}'")))?,
            "trials" => self.trials = parse_count(v).map_err(bad)?,
            "solvers" => self.solvers = parse_list(v, SolverKind::from_str).map_err(bad)?,
            "sketch" => self.sketch = v.parse().map_err(|e: slse_core::Error| bad(e.to_string()))?,
            "omega" => self.omega = parse_real(v).map_err(bad)?,
            "ai" => self.ai = v.parse().map_err(bad)?,
            "r-mult" => self.r_mult = parse_real(v).map_err(bad)?,
            "m1-mult" => self.m1_mult = parse_count(v).map_err(bad)?,
            "sizes" => {
                self.sizes = if v.is_empty() || v == "default" {
                    None
                } else {
                    Some(parse_list(v, parse_count).map_err(bad)?)
                }
            }
            "t-max" => self.t_max = parse_count(v).map_err(bad)?,
            "stop" => self.stop = v.parse().map_err(bad)?,
            "tol" => self.tol = parse_real(v).map_err(bad)?,
            "target-factor" => self.target_factor = parse_real(v).map_err(bad)?,
            "params" => self.params = v.parse().map_err(bad)?,
            "orientation" => {
                self.orientation = match v {
                    "growing" => RatioOrientation::Growing,
                    "shrinking" => RatioOrientation::Shrinking,
                    other => return Err(bad(format!("expected growing or shrinking, got '{other}'"))),
                }
            }
            "reset-momentum" => self.reset_momentum = parse_bool(v).map_err(bad)?,
            "wall-clock" => self.wall_clock = parse_bool(v).map_err(bad)?,
            "memory-cap-mb" => self.memory_cap_mb = parse_count(v).map_err(bad)?,
            "out-csv" => self.out_csv = Some(PathBuf::from(v)),
            "out-json" => self.out_json = Some(PathBuf::from(v)),
            "out-svg" => self.out_svg = Some(PathBuf::from(v)),
            _ => return Err(BenchError::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1)))?;
            self.set(key, value)
                .map_err(|e| BenchError::Config(format!("line {}: {}", lineno + 1, e.to_string().trim_start_matches("configuration error: "))))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Hessian sketch rows `r = round(r_mult · d)`.
    pub fn r(&self) -> usize {
        (self.r_mult * self.d as f64).round() as usize
    }

    pub fn n_padded(&self) -> usize {
        self.n.next_power_of_two()
    }

    /// Stage-1 sizes: the explicit list, or doubling from `m1_mult · d` to `N/2`.
    pub fn resolved_sizes(&self) -> Result<Vec<usize>> {
        match &self.sizes {
            Some(s) => Ok(s.clone()),
            None => Ok(slse_core::schedule::doubling_sizes(self.n_padded(), self.d, self.m1_mult)?),
        }
    }

    /// Reject infeasible settings before any work is done.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.d == 0 || self.n < self.d {
            return fail(format!("need n >= d >= 1 (n = {}, d = {})", self.n, self.d));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return fail("no solvers selected".into());
        }
        if !(self.kappa >= 1.0) || !(self.sigma2 >= 0.0) {
            return fail(format!("need cond >= 1 and sigma2 >= 0 (cond = {}, sigma2 = {})", self.kappa, self.sigma2));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return fail(format!("omega must lie in (0, 1], got {}", self.omega));
        }
        if !(self.target_factor >= 1.0) || !(self.tol > 0.0) {
            return fail("target-factor must be >= 1 and tol > 0".into());
        }
        let bytes = self.n as u128 * self.d as u128 * 8;
        if bytes > self.memory_cap_mb as u128 * (1 << 20) {
            return fail(format!(
                "design matrix needs {} MiB, above the {} MiB cap",
                bytes >> 20,
                self.memory_cap_mb
            ));
        }
        let r = self.r();
        if r < self.d {
            return fail(format!("Hessian sketch size r = {r} is below d = {}", self.d));
        }
        if self.solvers.contains(&SolverKind::SlseFrs) {
            let sizes = self.resolved_sizes()?;
            if sizes.is_empty() {
                return fail("empty sketch size list".into());
            }
            if sizes[0] <= r {
                return fail(format!("first sketch size m_1 = {} must exceed r = {r}", sizes[0]));
            }
            if sizes.windows(2).any(|w| w[0] >= w[1]) || *sizes.last().unwrap() > self.n_padded() {
                return fail(format!("sketch sizes {sizes:?} must increase strictly and stay within {}", self.n_padded()));
            }
            if let ItersSpec::List(a) = &self.ai {
                if a.len() != 1 && a.len() != sizes.len() {
                    return fail(format!("{} iteration counts for {} subproblems", a.len(), sizes.len()));
                }
            }
        }
        Ok(())
    }
}
