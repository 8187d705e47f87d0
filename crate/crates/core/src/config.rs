//! Experiment configuration (TOML) and its validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{BathSpec, Normalization, SpectralDensity};
use crate::generators::Horizon;
use crate::models::{kelvin_to_energy, ModelSpec};
use crate::propagate::Stepper;
use crate::quad::QuadTol;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Redfield,
    Lindblad,
    Ccqme,
    ExactHo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Redfield => "redfield",
            Method::Lindblad => "lindblad",
            Method::Ccqme => "ccqme",
            Method::ExactHo => "exact_ho",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureUnit {
    #[default]
    Natural,
    Kelvin,
}

/// Either a bare number (natural units) or `{ value, unit }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Temperature {
    Natural(f64),
    Tagged { value: f64, unit: TemperatureUnit },
}

impl Temperature {
    pub fn natural(&self) -> Result<f64, ConfigError> {
        match *self {
            Temperature::Natural(t) | Temperature::Tagged { value: t, unit: TemperatureUnit::Natural } => Ok(t),
            Temperature::Tagged { value, unit: TemperatureUnit::Kelvin } => {
                kelvin_to_energy(value).map_err(|e| ConfigError::Invalid(e.to_string()))
            }
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    #[serde(flatten)]
    pub spectral: SpectralDensity,
    pub temperature: Temperature,
    #[serde(default = "yes")]
    pub counterterm: bool,
    #[serde(default)]
    pub normalization: Normalization,
    /// Ising chain site (1-based) the bath couples to; default `L/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// `exp(-beta0 H_S)/Z`
    Gibbs { beta0: f64 },
    /// Eigenstate `|n><n|` (0 is the ground state).
    Fock { n: usize },
    /// `(|n> + |m>)/sqrt(2)` in the eigenbasis.
    Superposition { n: usize, m: usize },
    /// CSV with columns `row,col,re,im` in the eigenbasis.
    File { path: PathBuf },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub t_max: f64,
    pub h: f64,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub stepper: Stepper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Bath temperature in natural units (all baths).
    Temperature,
    /// Coupling strength of every bath.
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// `[start, stop, count]`, endpoints included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linspace: Option<(f64, f64, usize)>,
}

impl Axis {
    pub fn points(&self) -> Result<Vec<f64>, ConfigError> {
        match (&self.values, self.linspace) {
            (Some(v), None) if !v.is_empty() => Ok(v.clone()),
            (None, Some((a, b, n))) if n >= 1 => {
                if n == 1 {
                    return Ok(vec![a]);
                }
                Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
            }
            _ => invalid("sweep axis needs exactly one of a non-empty `values` list or `linspace = [start, stop, count]`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub x: Axis,
    pub y: Axis,
    /// Averaging window in units of `2/gamma_total`.
    #[serde(default = "unit_f")]
    pub window: f64,
}

fn unit_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub eps_deg_rel: f64,
    pub eps_den_rel: f64,
    pub quad_abs: f64,
    pub quad_rel: f64,
    pub trace_tol: f64,
    pub local_tol: f64,
    pub self_check: bool,
    /// Largest Hilbert dimension for the direct null-space solve.
    pub max_lu_dim: usize,
    /// Long-time horizon for propagated steady states, in units of `1/gamma_total`.
    pub steady_horizon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuadTol::default();
        Tolerances {
            eps_deg_rel: 1e-9,
            eps_den_rel: 1e-12,
            quad_abs: q.abs,
            quad_rel: q.rel,
            trace_tol: 1e-8,
            local_tol: 1e-6,
            self_check: true,
            max_lu_dim: 64,
            steady_horizon: 20.0,
        }
    }
}

/// Reproduction metadata; ignored on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub command: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    #[serde(default = "default_horizon")]
    pub horizon: Horizon,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    pub baths: Vec<BathConfig>,
    pub initial: InitialState,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

fn default_horizon() -> Horizon {
    Horizon::Infinite
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.resolved()
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        // relative file paths are taken relative to the config
        if let InitialState::File { path: p } = &mut cfg.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validated copy with temperatures in natural units.
    pub fn resolved(mut self) -> Result<Self, ConfigError> {
        for b in &mut self.baths {
            b.temperature = Temperature::Natural(b.temperature.natural()?);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.methods.is_empty() {
            return invalid("at least one method is required");
        }
        self.model.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.baths.is_empty() {
            return invalid("at least one bath is required");
        }
        let is_ho = matches!(self.model, ModelSpec::HarmonicOscillator { .. });
        if self.methods.contains(&Method::ExactHo) {
            if !is_ho {
                return invalid("exact_ho is only available for the harmonic_oscillator model");
            }
            let mut wd = None;
            for b in &self.baths {
                match b.spectral {
                    SpectralDensity::LorentzDrude { omega_d, .. } => {
                        if wd.is_some_and(|w: f64| (w - omega_d).abs() > 1e-12 * w) {
                            return invalid("exact_ho needs a common Drude cutoff for all baths");
                        }
                        wd = Some(omega_d);
                    }
                    _ => return invalid("exact_ho needs Lorentz-Drude baths"),
                }
                if b.normalization != Normalization::CaldeiraLeggett {
                    return invalid("exact_ho needs caldeira_leggett normalization");
                }
            }
        }
        for b in &self.baths {
            self.bath_spec(b)?;
            if let Some(site) = b.site {
                match self.model {
                    ModelSpec::IsingChain { length, .. } if (1..=length).contains(&site) => {}
                    ModelSpec::IsingChain { length, .. } => return invalid(format!("site {site} outside 1..={length}")),
                    _ => return invalid("`site` applies to the ising_chain model only"),
                }
            }
        }
        let t = &self.time;
        if !(t.h > 0.0 && t.t_max > 0.0 && t.h <= t.t_max) || t.stride == 0 {
            return invalid(format!("time block needs 0 < h <= t_max and stride >= 1 (h={}, t_max={}, stride={})", t.h, t.t_max, t.stride));
        }
        let dim = self.dimension();
        match &self.initial {
            InitialState::Gibbs { beta0 } if !(*beta0 >= 0.0) => return invalid("beta0 must be non-negative"),
            InitialState::Fock { n } if *n >= dim => return invalid(format!("initial level {n} outside dimension {dim}")),
            InitialState::Superposition { n, m } if *n >= dim || *m >= dim || n == m => {
                return invalid(format!("superposition levels ({n}, {m}) must be distinct and below {dim}"))
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            s.x.points()?;
            s.y.points()?;
            if s.x.param == s.y.param {
                return invalid("sweep axes must vary different parameters");
            }
            if !(s.window > 0.0) {
                return invalid("sweep window must be positive");
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match self.model {
            ModelSpec::HarmonicOscillator { levels, .. } => levels,
            ModelSpec::SpinBoson { .. } => 2,
            ModelSpec::IsingChain { length, .. } => 1 << length,
        }
    }

    pub fn quad_tol(&self) -> QuadTol {
        QuadTol { abs: self.tolerances.quad_abs, rel: self.tolerances.quad_rel, ..QuadTol::default() }
    }

    pub fn bath_spec(&self, b: &BathConfig) -> Result<BathSpec, ConfigError> {
        let t = b.temperature.natural()?;
        BathSpec::new(b.spectral, t, b.counterterm, b.normalization)
            .map(|s| s.with_tol(self.quad_tol()))
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn bath_specs(&self) -> Result<Vec<BathSpec>, ConfigError> {
        self.baths.iter().map(|b| self.bath_spec(b)).collect()
    }

    /// Sum of the coupling strengths.
    pub fn gamma_total(&self) -> f64 {
        self.baths.iter().map(|b| b.spectral.strength()).sum()
    }

    /// Copy with `param = value` applied to every bath.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        for b in &mut c.baths {
            match param {
                SweepParam::Temperature => b.temperature = Temperature::Natural(value),
                SweepParam::Gamma => b.spectral = b.spectral.with_strength(value),
            }
        }
        c.sweep = None;
        c.validate()?;
        Ok(c)
    }
}
