//! Run configuration: a TOML file with one section per solver, every key
//! optional. Unknown keys are errors. Command-line flags are applied on top
//! of the file and the result is validated again.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use carl_core::params::{PhysicalParams, RB87_D2_WAVELENGTH, RB87_MASS};
use carl_core::stability::{CavityRegime, SweepParam};

/// A configuration problem. Reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: String,
    pub seed: u64,
    pub model: ModelConfig,
    pub fp: FpConfig,
    pub sde: SdeConfig,
    pub threshold: ThresholdConfig,
    pub sweep: SweepConfig,
    pub map: MapConfig,
    pub physical: PhysicalConfig,
    pub ramp: RampConfig,
    pub scaling: ScalingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: "carl-out".into(),
            seed: 1,
            model: ModelConfig::default(),
            fp: FpConfig::default(),
            sde: SdeConfig::default(),
            threshold: ThresholdConfig::default(),
            sweep: SweepConfig::default(),
            map: MapConfig::default(),
            physical: PhysicalConfig::default(),
            ramp: RampConfig::default(),
            scaling: ScalingConfig::default(),
        }
    }
}

/// The dimensionless operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kappa: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kappa: 0.075, d: 1.49 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpConfig {
    pub n_max: usize,
    /// Requested step; lowered to 80% of the stiffness limit when needed.
    pub dt: f64,
    pub t_end: f64,
    /// Time between recorded samples.
    pub sample_interval: f64,
    pub seed_field: f64,
    pub tail_tolerance: f64,
    pub density_points: usize,
}

impl Default for FpConfig {
    fn default() -> Self {
        Self {
            n_max: 32,
            dt: 0.01,
            t_end: 300.0,
            sample_interval: 0.5,
            seed_field: 1e-5,
            tail_tolerance: 1e-8,
            density_points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeConfig {
    pub particles: usize,
    /// Step in `τ`. The full model uses `dt̄ = dtau·√γ̄`.
    pub dtau: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    /// `0` selects the overdamped model.
    pub gamma_bar: f64,
    pub seed_field: f64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            dtau: 0.004,
            t_end: 200.0,
            sample_interval: 0.5,
            gamma_bar: 0.0,
            seed_field: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub kappas: Vec<f64>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            kappas: vec![1e-3, 0.05, 0.1, 1.0, 10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kappa: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kappa: 0.1,
            d_min: 0.05,
            d_max: 2.2,
            points: 216,
        }
    }
}

/// Log-spaced `(κ, D)` grid for the instability map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub points: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            kappa_min: 0.05,
            kappa_max: 5.0,
            d_min: 0.05,
            d_max: 5.0,
            points: 81,
        }
    }
}

/// Laboratory parameters, in the units experimentalists quote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConfig {
    /// `κ_c/2π`, Hz.
    pub kappa_c_hz: f64,
    pub gamma_f_over_kappa_c: f64,
    pub temperature_uk: f64,
    pub atom_count: f64,
    pub wavelength_nm: f64,
    pub atom_mass_kg: f64,
    pub spread_prefactor: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            kappa_c_hz: 22e3,
            gamma_f_over_kappa_c: 9.0,
            temperature_uk: 150.0,
            atom_count: 1e6,
            wavelength_nm: RB87_D2_WAVELENGTH * 1e9,
            atom_mass_kg: RB87_MASS,
            spread_prefactor: 2.0,
        }
    }
}

impl PhysicalConfig {
    pub fn to_params(&self) -> PhysicalParams {
        let two_pi = 2.0 * std::f64::consts::PI;
        let kappa_c = two_pi * self.kappa_c_hz;
        PhysicalParams {
            kappa_c,
            gamma_f: self.gamma_f_over_kappa_c * kappa_c,
            temperature: self.temperature_uk * 1e-6,
            atom_mass: self.atom_mass_kg,
            wavenumber: two_pi / (self.wavelength_nm * 1e-9),
            atom_count: self.atom_count,
            spread_prefactor: self.spread_prefactor,
            pump: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RampConfig {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub points: usize,
}

impl Default for RampConfig {
    fn default() -> Self {
        Self {
            ratio_min: 0.5,
            ratio_max: 4.0,
            points: 71,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepName {
    Temperature,
    CavityLoss,
    Friction,
    AtomCount,
}

impl From<SweepName> for SweepParam {
    fn from(s: SweepName) -> Self {
        match s {
            SweepName::Temperature => SweepParam::Temperature,
            SweepName::CavityLoss => SweepParam::CavityLoss,
            SweepName::Friction => SweepParam::Friction,
            SweepName::AtomCount => SweepParam::AtomCount,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeName {
    Good,
    Bad,
    Both,
}

impl RegimeName {
    pub fn regimes(self) -> Vec<CavityRegime> {
        match self {
            RegimeName::Good => vec![CavityRegime::Good],
            RegimeName::Bad => vec![CavityRegime::Bad],
            RegimeName::Both => vec![CavityRegime::Good, CavityRegime::Bad],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub sweep: SweepName,
    pub regime: RegimeName,
    /// The swept parameter runs from its base value up by this many decades.
    pub decades: f64,
    pub points: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            sweep: SweepName::Temperature,
            regime: RegimeName::Both,
            decades: 1.0,
            points: 9,
        }
    }
}

/// Reads and validates a config file. An empty file yields the defaults.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
    if let Err((key, msg)) = cfg.check() {
        let at = match locate(text, &key) {
            Some(line) => format!("line {line}"),
            None => "default value".to_string(),
        };
        return Err(ConfigError(format!("{at}: `{key}` {msg}")));
    }
    Ok(cfg)
}

/// Line (1-based) where dotted `key` is assigned in `text`.
fn locate(text: &str, key: &str) -> Option<usize> {
    let (section, name) = match key.rsplit_once('.') {
        Some((s, n)) => (s, n),
        None => ("", key),
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        if let Some((lhs, _)) = line.split_once('=') {
            let lhs = lhs.trim().trim_matches('"');
            if current == section && lhs == name {
                return Some(i + 1);
            }
        }
    }
    None
}

fn positive(key: &str, x: f64) -> Result<(), (String, String)> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err((key.to_string(), format!("must be finite and positive, got {x}")))
    }
}

fn nonnegative(key: &str, x: f64) -> Result<(), (String, String)> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err((key.to_string(), format!("must be finite and nonnegative, got {x}")))
    }
}

fn at_least(key: &str, n: usize, min: usize) -> Result<(), (String, String)> {
    if n >= min {
        Ok(())
    } else {
        Err((key.to_string(), format!("must be at least {min}, got {n}")))
    }
}

fn ordered(lo_key: &str, lo: f64, hi_key: &str, hi: f64) -> Result<(), (String, String)> {
    positive(lo_key, lo)?;
    positive(hi_key, hi)?;
    if lo < hi {
        Ok(())
    } else {
        Err((hi_key.to_string(), format!("must exceed {lo_key} = {lo}, got {hi}")))
    }
}

impl RunConfig {
    /// First out-of-range value, as `(dotted key, message)`.
    pub fn check(&self) -> Result<(), (String, String)> {
        if self.output_dir.trim().is_empty() {
            return Err(("output_dir".into(), "must not be empty".into()));
        }
        positive("model.kappa", self.model.kappa)?;
        nonnegative("model.D", self.model.d)?;

        let fp = &self.fp;
        at_least("fp.n_max", fp.n_max, 2)?;
        positive("fp.dt", fp.dt)?;
        positive("fp.t_end", fp.t_end)?;
        positive("fp.sample_interval", fp.sample_interval)?;
        nonnegative("fp.seed_field", fp.seed_field)?;
        positive("fp.tail_tolerance", fp.tail_tolerance)?;
        at_least("fp.density_points", fp.density_points, 8)?;

        let sde = &self.sde;
        at_least("sde.particles", sde.particles, 1)?;
        positive("sde.dtau", sde.dtau)?;
        positive("sde.t_end", sde.t_end)?;
        positive("sde.sample_interval", sde.sample_interval)?;
        nonnegative("sde.gamma_bar", sde.gamma_bar)?;
        nonnegative("sde.seed_field", sde.seed_field)?;
        // Euler-Maruyama on the momentum needs γ̄·dt̄ < 1.
        let relax = sde.gamma_bar * sde.gamma_bar.sqrt() * sde.dtau;
        if relax >= 1.0 {
            return Err((
                "sde.dtau".into(),
                format!("gives γ̄·dt̄ = {relax} ≥ 1 at gamma_bar = {}; lower it", sde.gamma_bar),
            ));
        }

        if self.threshold.kappas.is_empty() {
            return Err(("threshold.kappas".into(), "must not be empty".into()));
        }
        for &k in &self.threshold.kappas {
            positive("threshold.kappas", k)?;
        }

        positive("sweep.kappa", self.sweep.kappa)?;
        ordered("sweep.d_min", self.sweep.d_min, "sweep.d_max", self.sweep.d_max)?;
        at_least("sweep.points", self.sweep.points, 2)?;

        ordered("map.kappa_min", self.map.kappa_min, "map.kappa_max", self.map.kappa_max)?;
        ordered("map.d_min", self.map.d_min, "map.d_max", self.map.d_max)?;
        at_least("map.points", self.map.points, 2)?;

        let p = &self.physical;
        positive("physical.kappa_c_hz", p.kappa_c_hz)?;
        positive("physical.gamma_f_over_kappa_c", p.gamma_f_over_kappa_c)?;
        positive("physical.temperature_uk", p.temperature_uk)?;
        positive("physical.atom_count", p.atom_count)?;
        positive("physical.wavelength_nm", p.wavelength_nm)?;
        positive("physical.atom_mass_kg", p.atom_mass_kg)?;
        positive("physical.spread_prefactor", p.spread_prefactor)?;

        ordered(
            "ramp.ratio_min",
            self.ramp.ratio_min,
            "ramp.ratio_max",
            self.ramp.ratio_max,
        )?;
        at_least("ramp.points", self.ramp.points, 2)?;

        if !(self.scaling.decades >= 1.0 && self.scaling.decades.is_finite()) {
            return Err((
                "scaling.decades".into(),
                format!("must be at least 1 for a meaningful fit, got {}", self.scaling.decades),
            ));
        }
        at_least("scaling.points", self.scaling.points, 3)?;
        Ok(())
    }

    /// Validation after command-line overrides; names the key without a line.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check().map_err(|(key, msg)| ConfigError(format!("`{key}` {msg}")))
    }
}
