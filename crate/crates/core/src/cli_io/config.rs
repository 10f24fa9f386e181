//! Run configuration: a JSON object with flat keys plus one nested `initial`
//! block. Overrides of the form `key=value` (or `initial.key=value`) are
//! merged into the parsed document before validation, so they pass through
//! exactly the same checks as keys in the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::initial::InitialSpec;
use crate::active_scalar::ModelParams;
use crate::error::{Error, Result};
use crate::function_spaces::{BesovParams, PairSampler};
use crate::spectral::Grid2D;
use crate::verifier::{ScalingOptions, VerifySuiteConfig};

/// Smallest grid accepted from user input.
pub const MIN_GRID: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Norms,
    VerifyCommutator,
    VerifyEmbedding,
    VerifyBernstein,
    Scaling,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Simulate,
        Mode::Norms,
        Mode::VerifyCommutator,
        Mode::VerifyEmbedding,
        Mode::VerifyBernstein,
        Mode::Scaling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Norms => "norms",
            Mode::VerifyCommutator => "verify-commutator",
            Mode::VerifyEmbedding => "verify-embedding",
            Mode::VerifyBernstein => "verify-bernstein",
            Mode::Scaling => "scaling",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config("mode", format!("unknown mode {s:?}")))
    }
}

/// A real number that may also be written as the string `"inf"`.
fn extended_real<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Text(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
        Repr::Text(s) => Err(de::Error::custom(format!(
            "expected a number or \"inf\", got {s:?}"
        ))),
    }
}

fn default_mode() -> Mode {
    Mode::Simulate
}
fn default_cfl() -> f64 {
    ModelParams::DEFAULT_CFL
}
fn default_infinity() -> f64 {
    f64::INFINITY
}
fn default_save_every() -> usize {
    10
}
fn default_p() -> f64 {
    2.0
}
fn default_q() -> f64 {
    1.0
}
fn default_seeds() -> Vec<u64> {
    VerifySuiteConfig::default().seeds
}
fn default_n_list() -> Vec<usize> {
    VerifySuiteConfig::default().n_list
}
fn default_beta_list() -> Vec<f64> {
    VerifySuiteConfig::default().beta_list
}
fn default_gammas() -> Vec<f64> {
    VerifySuiteConfig::default().gammas
}
fn default_m() -> u32 {
    VerifySuiteConfig::default().m_shift
}
fn default_m_sensitivity() -> Vec<u32> {
    VerifySuiteConfig::default().m_sensitivity
}
fn default_pairs() -> usize {
    PairSampler::DEFAULT_PAIRS
}
fn default_lambdas() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}
fn default_max_time() -> f64 {
    ScalingOptions::default().max_time
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Grid size; required by `simulate` and `scaling`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Velocity exponent; required by `simulate` and `scaling`.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Final time; required by `simulate`.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_infinity", deserialize_with = "extended_real")]
    pub dt_max: f64,
    /// Steps between saved rows and snapshots.
    #[serde(default = "default_save_every")]
    pub save_every: usize,
    #[serde(default)]
    pub initial: InitialSpec,

    /// Smoothness for `norms`; defaults to `1 + beta` of the snapshot.
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default = "default_p", deserialize_with = "extended_real")]
    pub p: f64,
    #[serde(default = "default_q", deserialize_with = "extended_real")]
    pub q: f64,

    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_beta_list")]
    pub beta_list: Vec<f64>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_m", rename = "M")]
    pub m_shift: u32,
    #[serde(default = "default_m_sensitivity")]
    pub m_sensitivity: Vec<u32>,
    #[serde(default = "default_pairs")]
    pub pair_budget: usize,

    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Time cap of the `λ = 1` doubling run.
    #[serde(default = "default_max_time")]
    pub max_time: f64,

    /// Snapshot read by `norms`.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Grid of a validated `simulate`/`scaling` config.
    pub fn grid(&self) -> Result<Grid2D> {
        let n = self
            .n
            .ok_or_else(|| Error::config("n", "required for this mode"))?;
        check_grid("n", n)
    }

    pub fn beta(&self) -> Result<f64> {
        self.beta
            .ok_or_else(|| Error::config("beta", "required for this mode"))
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.beta()?, self.cfl, self.dt_max)
    }

    pub fn suite(&self) -> VerifySuiteConfig {
        VerifySuiteConfig {
            seeds: self.seeds.clone(),
            n_list: self.n_list.clone(),
            beta_list: self.beta_list.clone(),
            gammas: self.gammas.clone(),
            p: self.p,
            q: self.q,
            m_shift: self.m_shift,
            m_sensitivity: self.m_sensitivity.clone(),
            pair_budget: self.pair_budget,
        }
    }

    pub fn scaling_options(&self) -> ScalingOptions {
        ScalingOptions {
            cfl: self.cfl,
            max_time: self.max_time,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n {
            check_grid("n", n)?;
        }
        if let Some(beta) = self.beta {
            check_beta("beta", beta)?;
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config(
                    "t_end",
                    format!("must be positive and finite, got {t}"),
                ));
            }
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::config(
                "cfl",
                format!("must be positive and finite, got {}", self.cfl),
            ));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::config(
                "dt_max",
                format!("must be positive, got {}", self.dt_max),
            ));
        }
        if self.save_every == 0 {
            return Err(Error::config("save_every", "must be at least 1"));
        }
        self.initial.validate()?;
        if let Some(s) = self.s {
            if !s.is_finite() {
                return Err(Error::config("s", "must be finite"));
            }
        }
        if !(self.p >= 1.0) {
            return Err(Error::config(
                "p",
                format!("must lie in [1, inf], got {}", self.p),
            ));
        }
        if !(self.q >= 1.0) {
            return Err(Error::config(
                "q",
                format!("must lie in [1, inf], got {}", self.q),
            ));
        }
        for &n in &self.n_list {
            check_grid("n_list", n)?;
        }
        for &b in &self.beta_list {
            check_beta("beta_list", b)?;
        }
        if self.gammas.iter().any(|g| !g.is_finite()) || self.gammas.is_empty() {
            return Err(Error::config(
                "gammas",
                "must be a nonempty list of finite values",
            ));
        }
        if self.pair_budget == 0 {
            return Err(Error::config("pair_budget", "must be at least 1"));
        }
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(Error::config("max_time", "must be positive and finite"));
        }
        self.validate_mode()
    }

    fn validate_mode(&self) -> Result<()> {
        match self.mode {
            Mode::Simulate => {
                let grid = self.grid()?;
                self.beta()?;
                if self.t_end.is_none() {
                    return Err(Error::config("t_end", "required for simulate"));
                }
                super::initial::generate_initial(&self.initial, grid).map(|_| ())
            }
            Mode::Scaling => {
                let grid = self.grid()?;
                self.beta()?;
                if self.lambdas.len() < 2
                    || self.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite()))
                {
                    return Err(Error::config(
                        "lambdas",
                        "need at least two positive values",
                    ));
                }
                super::initial::generate_initial(&self.initial, grid).map(|_| ())
            }
            Mode::Norms => {
                if self.input.is_none() {
                    return Err(Error::config("input", "required for norms"));
                }
                BesovParams::new(self.s.unwrap_or(0.0), self.p, self.q).map(|_| ())
            }
            Mode::VerifyCommutator | Mode::VerifyEmbedding | Mode::VerifyBernstein => {
                self.suite().validate()
            }
        }
    }
}

fn check_grid(key: &str, n: usize) -> Result<Grid2D> {
    if n < MIN_GRID || !n.is_power_of_two() {
        return Err(Error::config(
            key,
            format!("must be a power of two >= {MIN_GRID}, got {n}"),
        ));
    }
    Grid2D::new(n)
}

fn check_beta(key: &str, beta: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&beta) {
        return Err(Error::config(key, format!("must lie in [0,2], got {beta}")));
    }
    Ok(())
}

/// Parses an override value: JSON if it parses, otherwise a plain string.
fn override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Applies `key=value` overrides to a parsed document.
pub fn apply_overrides<S: AsRef<str>>(doc: &mut Value, overrides: &[S]) -> Result<()> {
    for item in overrides {
        let item = item.as_ref();
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::config(item, "override must have the form key=value"))?;
        let key = key.trim();
        let root = doc
            .as_object_mut()
            .ok_or_else(|| Error::config(key, "configuration root must be an object"))?;
        match key.split_once('.') {
            None => {
                root.insert(key.to_string(), override_value(raw));
            }
            Some(("initial", sub)) => {
                let block = root
                    .entry("initial")
                    .or_insert_with(|| serde_json::to_value(InitialSpec::default()).unwrap());
                let block = block
                    .as_object_mut()
                    .ok_or_else(|| Error::config("initial", "must be an object"))?;
                block.insert(sub.to_string(), override_value(raw));
            }
            Some(_) => return Err(Error::config(key, "unknown nested key")),
        }
    }
    Ok(())
}

/// Converts a serde error into a configuration error naming the offending
/// key when serde reports one.
fn serde_error(e: serde_json::Error) -> Error {
    let message = e.to_string();
    let key = message
        .split('`')
        .nth(1)
        .filter(|_| message.contains("field"))
        .unwrap_or("config")
        .to_string();
    Error::config(key, message)
}

/// Builds a validated config from a parsed document.
pub fn config_from_value(
    mut doc: Value,
    mode: Option<Mode>,
    overrides: &[String],
) -> Result<RunConfig> {
    if !doc.is_object() {
        return Err(Error::config("config", "root must be a JSON object"));
    }
    if let Some(m) = mode {
        doc["mode"] = Value::String(m.as_str().to_string());
    }
    apply_overrides(&mut doc, overrides)?;
    let cfg: RunConfig = serde_json::from_value(doc).map_err(serde_error)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str, mode: Option<Mode>, overrides: &[String]) -> Result<RunConfig> {
    let doc: Value = serde_json::from_str(text).map_err(serde_error)?;
    config_from_value(doc, mode, overrides)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    load_config_with(path, None, &[])
}

pub fn load_config_with(
    path: &Path,
    mode: Option<Mode>,
    overrides: &[String],
) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, mode, overrides)
}
