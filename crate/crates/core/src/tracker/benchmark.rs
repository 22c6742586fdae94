use rayon::prelude::*;

use super::{track, PhotonNoise, TrackOptions, TrackerConfig};
use crate::error::{ensure_positive, Error, Result};
use crate::media::Trajectory;
use crate::rheology::{msd, psd, AxisSet, MsdOptions, Psd, PsdOptions};
use crate::rng::derive_seed;
use crate::stats::std_dev;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticBenchmarkOptions {
    /// Tracking time per brightness (s).
    pub duration: f64,
    /// Lag at which the apparent diffusion constant is read (s).
    pub tau: f64,
    /// Welch segment for the position PSD (s).
    pub psd_segment: f64,
    pub seed: u64,
    pub noise: PhotonNoise,
}

impl Default for StaticBenchmarkOptions {
    fn default() -> Self {
        Self {
            duration: 20.0,
            tau: 1.0,
            psd_segment: 1.0,
            seed: 0,
            noise: PhotonNoise::Poisson,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticBenchmarkRow {
    /// Total detected rate at lock (counts/s).
    pub brightness: f64,
    /// `MSD_xy(τ)/(4τ)` of the estimate (nm²/s).
    pub apparent_d_xy: f64,
    /// `MSD_z(τ)/(2τ)` (nm²/s).
    pub apparent_d_z: f64,
    /// Per-update 3D residual RMS (nm).
    pub rms_nm: f64,
    /// Standard deviation of the estimate along x, y, z (nm).
    pub axis_sd_nm: [f64; 3],
    pub mean_photons: f64,
    pub lost_lock: bool,
    /// Position PSD of the estimate, x and y summed.
    pub psd_xy: Psd,
    pub psd_z: Psd,
}

/// Tracks a stationary emitter at each brightness and reports the apparent
/// diffusion constant and position spectra produced by shot noise alone.
/// Brightness points run in parallel with per-point seeds.
pub fn static_benchmark(
    brightness: &[f64],
    cfg: &TrackerConfig,
    opts: &StaticBenchmarkOptions,
) -> Result<Vec<StaticBenchmarkRow>> {
    cfg.validate()?;
    ensure_positive("duration", opts.duration)?;
    ensure_positive("tau", opts.tau)?;
    for &b in brightness {
        ensure_positive("brightness", b)?;
    }
    let lag = (opts.tau / cfg.t_orbit).round() as usize;
    let n_updates = (opts.duration / cfg.t_orbit).floor() as usize;
    if lag == 0 || lag * 4 > n_updates {
        return Err(Error::invalid(format!(
            "tau = {} s needs a duration of at least 4·tau (got {} s)",
            opts.tau, opts.duration
        )));
    }
    let truth = Trajectory::new(opts.duration, 0.0, vec![[0.0; 3]; 2])?;
    brightness
        .par_iter()
        .enumerate()
        .map(|(i, &b)| {
            let mut to = TrackOptions::new(b, derive_seed(opts.seed, "static-benchmark", i as u64));
            to.noise = opts.noise;
            let out = track(&truth, cfg, &to)?;
            let est = &out.estimate;
            let mo = MsdOptions::default();
            let m_xy = msd(est, AxisSet::XY, &[lag], &mo)?;
            let m_z = msd(est, AxisSet::Z, &[lag], &mo)?;
            let tau = lag as f64 * cfg.t_orbit;
            let po = PsdOptions { segment_s: opts.psd_segment };
            Ok(StaticBenchmarkRow {
                brightness: b,
                apparent_d_xy: m_xy.msd[0] / (4.0 * tau),
                apparent_d_z: m_z.msd[0] / (2.0 * tau),
                rms_nm: out.diagnostics.rms_error(),
                axis_sd_nm: [0, 1, 2].map(|a| std_dev(&est.axis(a))),
                mean_photons: out.diagnostics.mean_photons,
                lost_lock: out.diagnostics.lost_lock(),
                psd_xy: psd(est, AxisSet::XY, &po)?,
                psd_z: psd(est, AxisSet::Z, &po)?,
            })
        })
        .collect()
}
