//! Photon-level emulation of double-plane orbital tracking.
//!
//! The excitation orbits the last estimated position with radius `R_xy`;
//! two detectors collect from planes displaced by `±R_z`. After every orbit
//! the 2 × `n_bins` counts are fitted and the orbit centre is moved by the
//! resulting correction.

mod benchmark;
mod config;
mod orbit;

pub use benchmark::{static_benchmark, StaticBenchmarkRow, StaticBenchmarkOptions};
pub use config::TrackerConfig;
pub use orbit::{
    axial_factor, bin_angle, correction, expected_frame, expected_rate, fit_orbit,
    transverse_factor, FitResult, OrbitFrame, Plane,
};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{ensure_positive, Error, Result};
use crate::media::{Point3, Trajectory};
use crate::rng::{substream, SimRng};

/// Photon statistics used when filling orbit bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhotonNoise {
    #[default]
    Poisson,
    /// Expected counts, no shot noise.
    NoiseFree,
}

/// Per-sample multiplier on the detected rate (e.g. ODMR contrast dips),
/// evaluated at absolute time in seconds.
pub type Modulation<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

pub struct TrackOptions<'a> {
    /// Total detected rate at lock, both planes summed (counts/s).
    pub brightness: f64,
    pub seed: u64,
    /// Initial orbit centre relative to the true start position (nm).
    pub initial_offset: Point3,
    pub noise: PhotonNoise,
    pub modulation: Option<Modulation<'a>>,
}

impl<'a> TrackOptions<'a> {
    pub fn new(brightness: f64, seed: u64) -> Self {
        Self {
            brightness,
            seed,
            initial_offset: [0.0; 3],
            noise: PhotonNoise::Poisson,
            modulation: None,
        }
    }
}

/// Per-update diagnostics of a tracking run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackDiagnostics {
    /// Update times (s), orbit midpoints.
    pub times: Vec<f64>,
    /// `|estimate − truth|` per update (nm), truth averaged over the orbit.
    pub err_nm: Vec<f64>,
    /// Whether the loop was still considered locked at each update.
    pub locked: Vec<bool>,
    /// Index of the update at which lock loss was declared.
    pub lock_lost_at: Option<usize>,
    /// Updates whose frame carried no photons.
    pub no_signal_updates: usize,
    /// Mean detected photons per update.
    pub mean_photons: f64,
}

impl TrackDiagnostics {
    pub fn lost_lock(&self) -> bool {
        self.lock_lost_at.is_some()
    }

    /// RMS of the residual over the locked updates (nm).
    pub fn rms_error(&self) -> f64 {
        let v: Vec<f64> = self
            .err_nm
            .iter()
            .zip(&self.locked)
            .filter(|(_, &l)| l)
            .map(|(e, _)| e * e)
            .collect();
        (v.iter().sum::<f64>() / v.len().max(1) as f64).sqrt()
    }
}

/// Result of [`track`]: one estimate per orbit period plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub estimate: Trajectory,
    /// Truth averaged over each orbit, aligned with `estimate`.
    pub truth_avg: Trajectory,
    pub diagnostics: TrackDiagnostics,
}

fn poisson_draw(mean: f64, rng: &mut SimRng) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    match Poisson::new(mean) {
        Ok(p) => p.sample(rng),
        // only reachable for absurd means; fall back to a Gaussian
        Err(_) => (mean + mean.sqrt() * rng.sample::<f64, _>(rand_distr::StandardNormal)).round(),
    }
}

/// Runs the closed feedback loop against a true trajectory.
///
/// The true position is linearly interpolated at every clock tick, the
/// expected rate of each plane is integrated tick by tick into the angular
/// bins, and each bin is Poisson-sampled once (the sum of independent
/// per-tick Poisson counts has exactly this distribution).
pub fn track(truth: &Trajectory, cfg: &TrackerConfig, opts: &TrackOptions<'_>) -> Result<TrackOutput> {
    cfg.validate()?;
    ensure_positive("brightness", opts.brightness)?;
    truth.require_analysable()?;
    let n_updates = (truth.duration() / cfg.t_orbit + 1e-9).floor() as usize;
    if n_updates == 0 {
        return Err(Error::NotEnoughData(format!(
            "trajectory of {} s is shorter than one orbit ({} s)",
            truth.duration(),
            cfg.t_orbit
        )));
    }

    let (i_top_c, i_bottom_c) = cfg.plane_rates_for_brightness(opts.brightness);
    let spo = cfg.samples_per_orbit();
    let spb = cfg.samples_per_bin();
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..spo)
        .map(|j| {
            let th = 2.0 * PI * (j as f64 + 0.5) / spo as f64;
            (th.cos(), th.sin())
        })
        .unzip();
    let lock_radius = cfg.lock_loss_factor * cfg.w_xy;
    let mut rng = substream(opts.seed, "tracker-photons", 0);

    let start = truth.position_at(truth.t0);
    let mut center = [
        start[0] + opts.initial_offset[0],
        start[1] + opts.initial_offset[1],
        start[2] + opts.initial_offset[2],
    ];

    let mut estimates = Vec::with_capacity(n_updates);
    let mut truths = Vec::with_capacity(n_updates);
    let mut diag = TrackDiagnostics::default();
    let mut streak = 0usize;
    let mut photons = 0.0;
    let mut frame = OrbitFrame::empty(cfg.n_bins, center);

    for k in 0..n_updates {
        let t_start = truth.t0 + k as f64 * cfg.t_orbit;
        frame.counts_top.iter_mut().for_each(|c| *c = 0.0);
        frame.counts_bottom.iter_mut().for_each(|c| *c = 0.0);
        frame.orbit_center = center;
        let mut truth_sum = [0.0; 3];
        let plane_top = center[2] + cfg.r_z;
        let plane_bottom = center[2] - cfg.r_z;
        for j in 0..spo {
            let t = t_start + (j as f64 + 0.5) * cfg.clock;
            let p = truth.position_at(t);
            for (s, c) in truth_sum.iter_mut().zip(p) {
                *s += c;
            }
            let beam = [
                center[0] + cfg.r_xy * cos_t[j],
                center[1] + cfg.r_xy * sin_t[j],
                center[2],
            ];
            let mut tr = transverse_factor(&p, &beam, cfg.w_xy) * cfg.clock;
            if let Some(m) = opts.modulation {
                tr *= m(t);
            }
            let bin = j / spb;
            frame.counts_top[bin] += i_top_c * tr * axial_factor(p[2], plane_top, cfg.w_z)
                + cfg.background * cfg.clock;
            frame.counts_bottom[bin] += i_bottom_c * tr * axial_factor(p[2], plane_bottom, cfg.w_z)
                + cfg.background * cfg.clock;
        }
        if opts.noise == PhotonNoise::Poisson {
            for c in frame.counts_top.iter_mut().chain(frame.counts_bottom.iter_mut()) {
                *c = poisson_draw(*c, &mut rng);
            }
        }
        photons += frame.total();

        let delta = match fit_orbit(&frame, cfg) {
            Ok(fit) => correction(&fit, cfg)?,
            Err(Error::NoSignal) => {
                diag.no_signal_updates += 1;
                [0.0; 3]
            }
            Err(e) => return Err(e),
        };
        let estimate = [center[0] + delta[0], center[1] + delta[1], center[2] + delta[2]];
        for (c, d) in center.iter_mut().zip(delta) {
            *c += cfg.gain * d;
        }
        let avg = truth_sum.map(|s| s / spo as f64);
        let err = ((estimate[0] - avg[0]).powi(2)
            + (estimate[1] - avg[1]).powi(2)
            + (estimate[2] - avg[2]).powi(2))
        .sqrt();
        if err > lock_radius {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= cfg.lock_loss_updates && diag.lock_lost_at.is_none() {
            diag.lock_lost_at = Some(k);
        }
        diag.times.push(t_start + 0.5 * cfg.t_orbit);
        diag.err_nm.push(err);
        diag.locked.push(diag.lock_lost_at.is_none());
        estimates.push(estimate);
        truths.push(avg);
    }
    diag.mean_photons = photons / n_updates as f64;

    let t0 = truth.t0 + 0.5 * cfg.t_orbit;
    let mut estimate = Trajectory::new(cfg.t_orbit, t0, estimates)?;
    estimate.meta = truth.meta.clone();
    estimate.set_meta("source", "tracker");
    estimate.set_meta("tracker_seed", opts.seed);
    estimate.set_meta("brightness_cps", opts.brightness);
    let mut truth_avg = Trajectory::new(cfg.t_orbit, t0, truths)?;
    truth_avg.meta = truth.meta.clone();
    Ok(TrackOutput {
        estimate,
        truth_avg,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stationary(duration: f64, dt: f64) -> Trajectory {
        let n = (duration / dt).round() as usize + 1;
        Trajectory::new(dt, 0.0, vec![[0.0; 3]; n]).unwrap()
    }

    #[test]
    fn noise_free_loop_converges_from_offset() {
        let cfg = TrackerConfig::default();
        let truth = stationary(0.2, 1e-3);
        for offset in [[130.0, 0.0, 0.0], [-60.0, 90.0, 0.0], [40.0, -40.0, 30.0]] {
            let mut o = TrackOptions::new(1e6, 1);
            o.noise = PhotonNoise::NoiseFree;
            o.initial_offset = offset;
            let out = track(&truth, &cfg, &o).unwrap();
            let e = &out.diagnostics.err_nm;
            assert!(e[9] < 1.0, "offset {offset:?}: residual after 10 updates {}", e[9]);
        }
    }

    #[test]
    fn correction_points_toward_small_offsets() {
        let cfg = TrackerConfig::default();
        let (it, ib) = cfg.plane_rates_for_brightness(1e6);
        for k in 0..24 {
            let th = k as f64 * 0.27;
            let r = 5.0 + 2.0 * k as f64;
            let off = [r * th.cos(), r * th.sin(), (k as f64 - 12.0)];
            let frame = expected_frame(&off, &[0.0; 3], &cfg, it, ib);
            let d = correction(&fit_orbit(&frame, &cfg).unwrap(), &cfg).unwrap();
            let dot = d[0] * off[0] + d[1] * off[1] + d[2] * off[2];
            assert!(dot > 0.0, "offset {off:?} correction {d:?}");
        }
    }

    #[test]
    fn linearization_error_bounded() {
        let cfg = TrackerConfig::default();
        let (it, ib) = cfg.plane_rates_for_brightness(1e6);
        let max = 0.25 * cfg.w_xy;
        for k in 1..=10 {
            for th in [0.0, 0.7, 2.0, -2.5] {
                let r = max * k as f64 / 10.0;
                let off = [r * f64::cos(th), r * f64::sin(th), 0.0];
                let frame = expected_frame(&off, &[0.0; 3], &cfg, it, ib);
                let d = correction(&fit_orbit(&frame, &cfg).unwrap(), &cfg).unwrap();
                let err = ((d[0] - off[0]).powi(2) + (d[1] - off[1]).powi(2)).sqrt();
                assert!(err <= 0.15 * r, "r {r} err {err}");
            }
        }
    }

    #[test]
    fn deterministic_with_seed() {
        let cfg = TrackerConfig::default();
        let truth = stationary(0.1, 1e-3);
        let o = TrackOptions::new(2e5, 17);
        let a = track(&truth, &cfg, &o).unwrap();
        let b = track(&truth, &cfg, &o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_estimate_per_orbit() {
        let cfg = TrackerConfig::default();
        let truth = stationary(0.5, 2.4e-4);
        let out = track(&truth, &cfg, &TrackOptions::new(1e6, 3)).unwrap();
        assert_eq!(out.estimate.len(), 52);
        assert_eq!(out.estimate.dt, cfg.t_orbit);
        assert!(!out.diagnostics.lost_lock());
    }

    #[test]
    fn modulation_scales_photon_count() {
        let cfg = TrackerConfig::default();
        let truth = stationary(0.1, 1e-3);
        let half = |_t: f64| 0.5;
        let mut o = TrackOptions::new(1e6, 3);
        o.noise = PhotonNoise::NoiseFree;
        let full = track(&truth, &cfg, &o).unwrap();
        o.modulation = Some(&half);
        let dim = track(&truth, &cfg, &o).unwrap();
        let ratio = dim.diagnostics.mean_photons / full.diagnostics.mean_photons;
        assert!((ratio - 0.5).abs() < 1e-9);
        // 1e6 counts/s over one 9.6 ms orbit
        assert!((full.diagnostics.mean_photons - 9600.0).abs() < 1.0);
    }
}
