//! Run configurations. One JSON document per run; unknown keys are rejected
//! and every omitted field takes the documented default.

use std::path::{Path, PathBuf};

use cavity_eit::model::{ModelKind, SystemParams};
use cavity_eit::sideband::PulseSequence;
use cavity_eit::spectrum::{linspace, SweepMethod};
use cavity_eit::thermometry::{
    log_temperature_grid, DEFAULT_POINTS_PER_DECADE, DEFAULT_T_MAX, DEFAULT_T_MIN, MIN_CALIBRATION_POINTS,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Reads and parses a config file. Errors name the offending field path.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(format!("{path}: {}", e.into_inner()))
    })
}

fn check_params(p: &SystemParams) -> CliResult<()> {
    p.validate().map_err(|e| CliError::config(format!("params: {e}")))
}

/// Evenly spaced values, both ends included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self, field: &str) -> CliResult<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CliError::config(format!("{field}: need finite min < max")));
        }
        if self.points < 2 {
            return Err(CliError::config(format!("{field}.points: need at least 2")));
        }
        Ok(linspace(self.min, self.max, self.points))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min_k: f64,
    pub max_k: f64,
    pub per_decade: usize,
}

/// Either a logarithmic grid or an explicit increasing list, in kelvin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Temperatures {
    Log(LogGrid),
    List(Vec<f64>),
}

impl Default for Temperatures {
    fn default() -> Self {
        Temperatures::Log(LogGrid { min_k: DEFAULT_T_MIN, max_k: DEFAULT_T_MAX, per_decade: DEFAULT_POINTS_PER_DECADE })
    }
}

impl Temperatures {
    pub fn values(&self, field: &str) -> CliResult<Vec<f64>> {
        let temps = match self {
            Temperatures::Log(g) => log_temperature_grid(g.min_k, g.max_k, g.per_decade)
                .map_err(|e| CliError::config(format!("{field}: {e}")))?,
            Temperatures::List(v) => v.clone(),
        };
        if temps.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(CliError::config(format!("{field}: temperatures must be positive")));
        }
        if temps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::config(format!("{field}: temperatures must be strictly increasing")));
        }
        Ok(temps)
    }

    fn values_for_curve(&self, field: &str) -> CliResult<Vec<f64>> {
        let temps = self.values(field)?;
        if temps.len() < MIN_CALIBRATION_POINTS {
            return Err(CliError::config(format!("{field}: need at least {MIN_CALIBRATION_POINTS} temperatures")));
        }
        Ok(temps)
    }
}

fn thermal() -> ModelKind {
    ModelKind::Thermal
}

fn yes() -> bool {
    true
}

/// Output directory and worker count, shared by every command. Neither
/// affects the results, so they are left out of `meta.json`.
pub trait RunOptions {
    fn output_dir(&self) -> Option<&Path>;
    fn threads(&self) -> Option<usize>;
}

macro_rules! run_options {
    ($($t:ty),*) => {$(
        impl RunOptions for $t {
            fn output_dir(&self) -> Option<&Path> {
                self.output_dir.as_deref()
            }
            fn threads(&self) -> Option<usize> {
                self.threads
            }
        }
    )*};
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default = "thermal")]
    pub kind: ModelKind,
    #[serde(default)]
    pub method: SweepMethod,
    /// Defaults to the span set by the vacuum-Rabi peaks.
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default = "yes")]
    pub fit: bool,
    /// Repeats the linewidth with doubled cutoffs.
    #[serde(default)]
    pub convergence_check: bool,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl SpectrumConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_params(&self.params)?;
        if let Some(g) = &self.grid {
            g.values("grid")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub method: SweepMethod,
    #[serde(default)]
    pub temperatures: Temperatures,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl CalibrateConfig {
    pub fn validate(&self) -> CliResult<Vec<f64>> {
        check_params(&self.params)?;
        self.temperatures.values_for_curve("temperatures")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    pub measured_fwhm_mhz: f64,
    /// Directory written by a previous `calibrate` run. Without it the curve
    /// is rebuilt from `params` and `temperatures`.
    #[serde(default)]
    pub calibration_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub method: SweepMethod,
    #[serde(default)]
    pub temperatures: Temperatures,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl InvertConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.measured_fwhm_mhz.is_finite() && self.measured_fwhm_mhz > 0.0) {
            return Err(CliError::config("measured_fwhm_mhz: must be positive"));
        }
        if self.calibration_dir.is_none() {
            check_params(&self.params)?;
            self.temperatures.values_for_curve("temperatures")?;
        }
        Ok(())
    }
}

fn appendix_n_th() -> Vec<f64> {
    vec![0.5, 1.0, 5.0, 10.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Map2dConfig {
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub method: SweepMethod,
    pub g: Grid,
    pub omega_c: Grid,
    #[serde(default = "appendix_n_th")]
    pub n_th: Vec<f64>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl Map2dConfig {
    pub fn validate(&self) -> CliResult<(Vec<f64>, Vec<f64>)> {
        check_params(&self.params)?;
        if self.n_th.is_empty() || self.n_th.iter().any(|&n| !(n >= 0.0 && n.is_finite())) {
            return Err(CliError::config("n_th: need at least one finite value >= 0"));
        }
        let g = self.g.values("g")?;
        if g[0] < 0.0 {
            return Err(CliError::config("g.min: must be >= 0"));
        }
        let oc = self.omega_c.values("omega_c")?;
        if oc[0] < 0.0 {
            return Err(CliError::config("omega_c.min: must be >= 0"));
        }
        Ok((g, oc))
    }
}

fn one_to_ten() -> Vec<u32> {
    (1..=10).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiIonConfig {
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub method: SweepMethod,
    #[serde(default = "one_to_ten")]
    pub n_ions: Vec<u32>,
    /// When present, a calibration curve is built for every ion number.
    #[serde(default)]
    pub temperatures: Option<Temperatures>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl MultiIonConfig {
    pub fn validate(&self) -> CliResult<Option<Vec<f64>>> {
        check_params(&self.params)?;
        if self.n_ions.is_empty() || self.n_ions[0] == 0 || self.n_ions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config("n_ions: must be positive and strictly increasing"));
        }
        self.temperatures.as_ref().map(|t| t.values_for_curve("temperatures")).transpose()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub method: SweepMethod,
    pub omega_c: Grid,
    pub temperatures_k: Vec<f64>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl CompareConfig {
    pub fn validate(&self) -> CliResult<Vec<f64>> {
        check_params(&self.params)?;
        Temperatures::List(self.temperatures_k.clone()).values("temperatures_k")?;
        self.omega_c.values("omega_c")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticConfig {
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl AnalyticConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_params(&self.params)?;
        if let Some(g) = &self.grid {
            g.values("grid")?;
        }
        Ok(())
    }
}

fn check_sideband(eta: f64, omega: f64, gamma: f64) -> CliResult<()> {
    PulseSequence { steps: vec![], eta, omega, gamma }
        .validate()
        .map_err(|e| CliError::config(e.to_string()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiConfig {
    pub eta: f64,
    /// MHz
    pub omega: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub n0: usize,
    pub t_max_us: f64,
    pub points: usize,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl RabiConfig {
    pub fn validate(&self) -> CliResult<Vec<f64>> {
        check_sideband(self.eta, self.omega, self.gamma)?;
        Grid { min: 0.0, max: self.t_max_us, points: self.points }.values("t_max_us")
    }
}

fn eight() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioConfig {
    pub eta: f64,
    pub omega: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Ratios for `n = 1..=n_max`.
    #[serde(default = "eight")]
    pub n_max: usize,
    /// Defaults to the blue-sideband π time of each `n`.
    #[serde(default)]
    pub pulse_time_us: Option<f64>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl RatioConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_sideband(self.eta, self.omega, self.gamma)?;
        if !(self.eta > 0.0 && self.omega > 0.0) {
            return Err(CliError::config("eta and omega must be positive"));
        }
        if self.n_max == 0 {
            return Err(CliError::config("n_max: must be >= 1"));
        }
        if let Some(t) = self.pulse_time_us {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::config("pulse_time_us: must be positive"));
            }
        }
        Ok(())
    }
}

fn twenty() -> usize {
    20
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolConfig {
    pub sequence: PulseSequence,
    /// The ion starts in `|u, initial_phonon⟩`.
    pub initial_phonon: usize,
    /// Phonon cutoff of the simulation.
    pub n_phonon: usize,
    #[serde(default = "twenty")]
    pub samples_per_step: usize,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl CoolConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.sequence.validate().map_err(|e| CliError::config(format!("sequence: {e}")))?;
        if self.initial_phonon >= self.n_phonon {
            return Err(CliError::config("initial_phonon: must be below n_phonon"));
        }
        if self.samples_per_step == 0 {
            return Err(CliError::config("samples_per_step: must be >= 1"));
        }
        Ok(())
    }
}

run_options!(
    SpectrumConfig,
    CalibrateConfig,
    InvertConfig,
    Map2dConfig,
    MultiIonConfig,
    CompareConfig,
    AnalyticConfig,
    RabiConfig,
    RatioConfig,
    CoolConfig
);
