//! Experiment configuration file (JSON, versioned, unknown keys rejected).

use std::path::{Path, PathBuf};

use nanosense_core::chip::{DutyCycleSchedule, TemperatureSchedule};
use nanosense_core::media::{DirectedSegmentSpec, SlopeSign, ViscousMediumModel};
use nanosense_core::odmr::{Lineshape, ScanTiming};
use nanosense_core::rheology::{DiffusionFitMode, VarianceEstimator};
use nanosense_core::tracker::TrackerConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub medium: Option<MediumSpec>,
    pub tracker: Option<TrackerSpec>,
    pub odmr: Option<OdmrSpec>,
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

impl ExperimentConfig {
    pub fn empty() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub motion: MotionSpec,
    /// Sample period of the true trajectory (s).
    pub dt_s: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub directed: Vec<DirectedSegmentSpec>,
}

impl MediumSpec {
    pub fn n_steps(&self) -> usize {
        (self.duration_s / self.dt_s).round() as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionSpec {
    Brownian {
        d_nm2_per_s: f64,
    },
    /// Stokes–Einstein diffusion in a viscous liquid, one trajectory per
    /// temperature.
    Viscous {
        viscosity: ViscositySpec,
        radius_nm: f64,
        temperatures_c: Vec<f64>,
    },
    Viscoelastic {
        alpha: f64,
        k_alpha: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ViscositySpec {
    /// Printed glycerol constants with the chosen slope sign.
    Glycerol(SlopeSign),
    Linear(ViscousMediumModel),
    /// Pa·s
    Constant(f64),
}

impl ViscositySpec {
    pub fn model(&self) -> Result<ViscousMediumModel, CliError> {
        let m = match self {
            ViscositySpec::Glycerol(s) => ViscousMediumModel::glycerol(*s),
            ViscositySpec::Linear(m) => *m,
            ViscositySpec::Constant(eta) => ViscousMediumModel::constant(*eta),
        };
        m.validate().map_err(CliError::from)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerSpec {
    /// Total detected rate at lock (counts/s).
    pub brightness_cps: f64,
    #[serde(default)]
    pub geometry: TrackerConfig,
}

fn default_lambda0() -> f64 {
    nanosense_core::odmr::DEFAULT_LAMBDA0
}

fn default_kappa() -> f64 {
    -60.0
}

fn default_reference_bins() -> usize {
    500
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start_hz: f64,
    pub stop_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdmrSpec {
    #[serde(default = "Lineshape::default_double")]
    pub lineshape: Lineshape,
    /// Expected counts per frequency sample off resonance.
    #[serde(default = "default_lambda0")]
    pub lambda0: f64,
    #[serde(default)]
    pub timing: ScanTiming,
    /// Sweep range; `timing.points` sets the number of points.
    pub grid: Option<GridSpec>,
    /// kHz/°C
    #[serde(default = "default_kappa")]
    pub kappa_khz_per_c: f64,
    /// Length of the measurement (s).
    pub duration_s: Option<f64>,
    /// Zero-shift bins acquired to build the interpolation template.
    #[serde(default = "default_reference_bins")]
    pub reference_bins: usize,
    #[serde(default = "default_true")]
    pub write_spectra: bool,
}

impl OdmrSpec {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.grid {
            Some(g) => nanosense_core::odmr::uniform_grid(g.start_hz, g.stop_hz, self.timing.points).map_err(CliError::from),
            None => nanosense_core::odmr::uniform_grid(2850.0e6, 2890.0e6, self.timing.points).map_err(CliError::from),
        }
    }
}

fn default_timeline_s() -> f64 {
    1.0
}

fn default_setpoint_dt() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub duty: DutyCycleSchedule,
    pub temperature: Option<TemperatureSchedule>,
    /// Length of the written heater/microwave timeline (s).
    #[serde(default = "default_timeline_s")]
    pub timeline_s: f64,
    #[serde(default = "default_setpoint_dt")]
    pub setpoint_dt_s: f64,
}

fn default_axes() -> String {
    "xy".into()
}

fn default_max_lag() -> usize {
    20
}

fn default_psd_segment() -> f64 {
    1.0
}

fn default_floor() -> f64 {
    nanosense_core::rheology::DEFAULT_NOISE_FLOOR_NM2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default = "default_axes")]
    pub axes: String,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    /// Log-spaced lags instead of every lag up to `max_lag`.
    pub log_lags: Option<usize>,
    #[serde(default)]
    pub estimator: VarianceEstimator,
    #[serde(default = "default_floor")]
    pub noise_floor_nm2: f64,
    #[serde(default)]
    pub fit: FitSpec,
    /// Lag-time range for the exponent fit (s).
    pub exponent_range_s: Option<(f64, f64)>,
    /// Used when the trajectory carries no `temperature_c` metadata.
    pub temperature_c: Option<f64>,
    /// Probe radius; enables the modulus and force outputs.
    pub radius_nm: Option<f64>,
    /// Enables the hydrodynamic-radius fit over several temperatures.
    pub viscosity: Option<ViscositySpec>,
    #[serde(default = "default_psd_segment")]
    pub psd_segment_s: f64,
    pub segmentation: Option<SegmentationSpec>,
    pub force: Option<ForceSpec>,
    pub odmr: Option<OdmrAnalysisSpec>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all analysis fields have defaults")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum FitSpec {
    ThroughOrigin {
        #[serde(default)]
        tau_min_s: f64,
        tau_max_s: Option<f64>,
    },
    WithOffset {
        #[serde(default)]
        tau_min_s: f64,
        tau_max_s: Option<f64>,
    },
    SingleLag {
        tau_s: f64,
    },
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec::WithOffset {
            tau_min_s: 0.0,
            tau_max_s: None,
        }
    }
}

impl FitSpec {
    pub fn mode(&self) -> DiffusionFitMode {
        match *self {
            FitSpec::ThroughOrigin { tau_min_s, tau_max_s } => DiffusionFitMode::ThroughOrigin {
                tau_min: tau_min_s,
                tau_max: tau_max_s.unwrap_or(f64::INFINITY),
            },
            FitSpec::WithOffset { tau_min_s, tau_max_s } => DiffusionFitMode::WithOffset {
                tau_min: tau_min_s,
                tau_max: tau_max_s.unwrap_or(f64::INFINITY),
            },
            FitSpec::SingleLag { tau_s } => DiffusionFitMode::SingleLag { tau: tau_s },
        }
    }
}

fn default_window() -> usize {
    nanosense_core::segmentation::DEFAULT_WINDOW
}

fn default_dims() -> usize {
    2
}

fn default_confidence() -> f64 {
    0.95
}

fn default_min_length() -> f64 {
    nanosense_core::segmentation::DEFAULT_MIN_LENGTH_NM
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentationSpec {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_dims")]
    pub dims: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_min_length")]
    pub min_length_nm: f64,
}

impl Default for SegmentationSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all segmentation fields have defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSpec {
    /// Known medium viscosity (Pa·s). Without it the modulus is taken from
    /// the trajectory's own MSD.
    pub eta_pa_s: Option<f64>,
    /// Band for the external/thermal ratio (Hz).
    pub band_hz: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaLevelSpec {
    pub start_s: f64,
    pub end_s: f64,
    pub temperature_c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdmrAnalysisSpec {
    #[serde(default = "default_kappa")]
    pub kappa_khz_per_c: f64,
    /// Bin length of the spectra (s); defaults to the scan timing bin.
    pub bin_s: Option<f64>,
    /// Averaging-time range for the white-noise fit (s).
    pub allan_fit_s: Option<(f64, f64)>,
    /// Known-temperature intervals for a κ calibration.
    #[serde(default)]
    pub levels: Vec<KappaLevelSpec>,
    /// Number of leading bins used to build the interpolation template
    /// (all bins by default).
    pub template_bins: Option<usize>,
}

impl Default for OdmrAnalysisSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all odmr analysis fields have defaults")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"schema_version": 1, "sede": 3}"#).unwrap_err();
        assert!(err.to_string().contains("sede"));
        let err = serde_json::from_str::<ExperimentConfig>(
            r#"{"schema_version": 1, "medium": {"motion": {"kind": "brownian", "d": 1}, "dt_s": 0.01, "duration_s": 1}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains('d'));
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"schema_version": 1, "seed": 5,
                "medium": {"motion": {"kind": "viscous", "viscosity": {"glycerol": "negative"},
                           "radius_nm": 28, "temperatures_c": [22, 30]},
                           "dt_s": 0.001, "duration_s": 2},
                "tracker": {"brightness_cps": 1e6, "geometry": {"R_xy": 60}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.tracker.unwrap().geometry.r_xy, 60.0);
        assert_eq!(cfg.analysis.max_lag, 20);
        assert_eq!(cfg.medium.unwrap().n_steps(), 2000);
    }
}
