//! Photon model and per-orbit position estimation.

use std::f64::consts::PI;

use super::TrackerConfig;
use crate::error::{Error, Result};
use crate::media::Point3;

/// Collection plane, displaced by `±R_z` from the excitation focus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Top,
    Bottom,
}

impl Plane {
    pub fn axial_offset(self, cfg: &TrackerConfig) -> f64 {
        match self {
            Plane::Top => cfg.r_z,
            Plane::Bottom => -cfg.r_z,
        }
    }
}

/// Transverse Gaussian PSF factor for a beam at `beam` and emitter at
/// `emitter`.
#[inline]
pub fn transverse_factor(emitter: &Point3, beam: &Point3, w_xy: f64) -> f64 {
    let dx = beam[0] - emitter[0];
    let dy = beam[1] - emitter[1];
    (-2.0 * (dx * dx + dy * dy) / (w_xy * w_xy)).exp()
}

/// Axial Gaussian factor for the plane centred at `beam_z + offset`.
#[inline]
pub fn axial_factor(emitter_z: f64, plane_z: f64, w_z: f64) -> f64 {
    let dz = plane_z - emitter_z;
    (-2.0 * dz * dz / (w_z * w_z)).exp()
}

/// Count rate (counts/s) collected in `plane` for an emitter at `emitter`
/// while the excitation is at `beam`. `i_top_c`/`i_bottom_c` are the rates
/// each arm would see with the emitter at the orbit centre and no PSF
/// attenuation.
pub fn expected_rate(
    emitter: &Point3,
    beam: &Point3,
    plane: Plane,
    cfg: &TrackerConfig,
    i_top_c: f64,
    i_bottom_c: f64,
) -> f64 {
    let i_c = match plane {
        Plane::Top => i_top_c,
        Plane::Bottom => i_bottom_c,
    };
    i_c * transverse_factor(emitter, beam, cfg.w_xy)
        * axial_factor(emitter[2], beam[2] + plane.axial_offset(cfg), cfg.w_z)
}

/// Photon counts of one orbit, binned by angle and plane.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitFrame {
    /// Counts per angular bin in the top plane. Integral when photon noise
    /// is simulated, expected counts in noise-free mode.
    pub counts_top: Vec<f64>,
    pub counts_bottom: Vec<f64>,
    /// Orbit centre during acquisition (nm).
    pub orbit_center: Point3,
}

impl OrbitFrame {
    pub fn empty(n_bins: usize, orbit_center: Point3) -> Self {
        Self {
            counts_top: vec![0.0; n_bins],
            counts_bottom: vec![0.0; n_bins],
            orbit_center,
        }
    }

    pub fn total(&self) -> f64 {
        self.counts_top.iter().sum::<f64>() + self.counts_bottom.iter().sum::<f64>()
    }
}

/// Parameters of `I_n = I′[1 + δ·cos(θ_n − φ)]` plus the plane ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Mean counts per bin (both planes summed).
    pub i_prime: f64,
    /// Radial error in units of `eps_xy`.
    pub delta: f64,
    /// Azimuth of the error, in (−π, π].
    pub phi: f64,
    /// `(I_bottom − I_top)/(I_bottom + I_top)`.
    pub r_axial: f64,
}

/// Angle of the centre of bin `n`.
pub fn bin_angle(n: usize, n_bins: usize) -> f64 {
    2.0 * PI * (n as f64 + 0.5) / n_bins as f64
}

/// Least-squares sinusoid fit of the summed plane counts, solved in closed
/// form through the first Fourier coefficient of the uniform bins.
///
/// Each bin integrates the signal over an arc of `2π/n_bins`, which scales
/// the first harmonic by `sinc(π/n_bins)`; the amplitude is corrected for it.
pub fn fit_orbit(frame: &OrbitFrame, cfg: &TrackerConfig) -> Result<FitResult> {
    let n = frame.counts_top.len();
    if n < 3 || frame.counts_bottom.len() != n {
        return Err(Error::invalid("orbit frame needs >= 3 matching bins per plane"));
    }
    if n != cfg.n_bins {
        return Err(Error::invalid(format!(
            "frame has {n} bins, config expects {}",
            cfg.n_bins
        )));
    }
    let top: f64 = frame.counts_top.iter().sum();
    let bottom: f64 = frame.counts_bottom.iter().sum();
    if !(top + bottom > 0.0) {
        return Err(Error::NoSignal);
    }
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let i_n = frame.counts_top[k] + frame.counts_bottom[k];
        let theta = bin_angle(k, n);
        a += i_n;
        b += i_n * theta.cos();
        c += i_n * theta.sin();
    }
    let nf = n as f64;
    a /= nf;
    b *= 2.0 / nf;
    c *= 2.0 / nf;
    let half = PI / nf;
    let bin_gain = half.sin() / half;
    let delta = b.hypot(c) / (a * bin_gain);
    let mut phi = c.atan2(b);
    if phi <= -PI {
        phi += 2.0 * PI;
    }
    Ok(FitResult {
        i_prime: a,
        delta,
        phi,
        r_axial: (bottom - top) / (bottom + top),
    })
}

/// Position correction `(Δx, Δy, Δz)` in nm from a fitted orbit.
pub fn correction(fit: &FitResult, cfg: &TrackerConfig) -> Result<Point3> {
    let denom = fit.r_axial * cfg.g - 1.0;
    if denom.abs() < 1e-12 {
        return Err(Error::SingularGeometry(format!(
            "r·G = {} makes the axial correction singular",
            fit.r_axial * cfg.g
        )));
    }
    let radial = fit.delta * cfg.eps_xy();
    Ok([
        radial * fit.phi.cos(),
        radial * fit.phi.sin(),
        (fit.r_axial - cfg.g) / denom * cfg.eps_z(),
    ])
}

/// Noise-free frame for an emitter at `emitter` and orbit centre `center`,
/// integrating the expected rate tick by tick.
pub fn expected_frame(
    emitter: &Point3,
    center: &Point3,
    cfg: &TrackerConfig,
    i_top_c: f64,
    i_bottom_c: f64,
) -> OrbitFrame {
    let spo = cfg.samples_per_orbit();
    let spb = cfg.samples_per_bin();
    let mut frame = OrbitFrame::empty(cfg.n_bins, *center);
    for j in 0..spo {
        let theta = 2.0 * PI * (j as f64 + 0.5) / spo as f64;
        let beam = [
            center[0] + cfg.r_xy * theta.cos(),
            center[1] + cfg.r_xy * theta.sin(),
            center[2],
        ];
        let bin = j / spb;
        frame.counts_top[bin] +=
            expected_rate(emitter, &beam, Plane::Top, cfg, i_top_c, i_bottom_c) * cfg.clock;
        frame.counts_bottom[bin] +=
            expected_rate(emitter, &beam, Plane::Bottom, cfg, i_top_c, i_bottom_c) * cfg.clock;
    }
    frame
}
