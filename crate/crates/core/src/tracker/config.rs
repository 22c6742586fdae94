use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Geometry and timing of the double-plane orbital tracker. Serialised keys
/// follow the usual parameter names (`T_orbit`, `R_xy`, `w_xy`, `R_z`, `w_z`,
/// `G`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Orbit period (s).
    #[serde(rename = "T_orbit")]
    pub t_orbit: f64,
    /// Orbit radius (nm).
    #[serde(rename = "R_xy")]
    pub r_xy: f64,
    /// Transverse PSF 1/e² radius (nm).
    pub w_xy: f64,
    /// Axial half-separation of the two collection planes (nm).
    #[serde(rename = "R_z")]
    pub r_z: f64,
    /// Axial PSF 1/e² radius (nm).
    pub w_z: f64,
    /// Detector imbalance `(I_bottom − I_top)/(I_bottom + I_top)` at lock.
    #[serde(rename = "G")]
    pub g: f64,
    /// Angular bins per orbit.
    pub n_bins: usize,
    /// Photon sampling period (s).
    pub clock: f64,
    /// Fraction of each correction applied to the orbit centre.
    pub gain: f64,
    /// Constant background rate per plane (counts/s).
    pub background: f64,
    /// Lock is lost when the residual exceeds this multiple of `w_xy` ...
    pub lock_loss_factor: f64,
    /// ... for this many consecutive updates.
    pub lock_loss_updates: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            t_orbit: 9.6e-3,
            r_xy: 50.0,
            w_xy: 260.0,
            r_z: 200.0,
            w_z: 200.0,
            g: 0.0,
            n_bins: 8,
            clock: 10e-6,
            gain: 1.0,
            background: 0.0,
            lock_loss_factor: 3.0,
            lock_loss_updates: 5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("T_orbit", self.t_orbit),
            ("R_xy", self.r_xy),
            ("w_xy", self.w_xy),
            ("R_z", self.r_z),
            ("w_z", self.w_z),
            ("clock", self.clock),
            ("gain", self.gain),
            ("lock_loss_factor", self.lock_loss_factor),
        ] {
            ensure_positive(name, v)?;
        }
        ensure_finite("G", self.g)?;
        ensure_finite("background", self.background)?;
        if !(-1.0..=1.0).contains(&self.g) || self.g.abs() == 1.0 {
            return Err(Error::invalid(format!("G must lie in (-1, 1), got {}", self.g)));
        }
        if self.background < 0.0 {
            return Err(Error::invalid("background must be >= 0"));
        }
        if self.n_bins < 3 {
            return Err(Error::invalid("n_bins must be >= 3 to fit a sinusoid"));
        }
        if self.lock_loss_updates == 0 {
            return Err(Error::invalid("lock_loss_updates must be >= 1"));
        }
        let ticks = self.t_orbit / self.clock;
        let spo = ticks.round();
        if (ticks - spo).abs() > 1e-6 * ticks || !(spo as usize).is_multiple_of(self.n_bins) {
            return Err(Error::invalid(format!(
                "T_orbit/clock = {ticks} must be an integer multiple of n_bins = {}",
                self.n_bins
            )));
        }
        let (ex, ez) = (self.eps_xy(), self.eps_z());
        if !(ex.is_finite() && ex > 0.0 && ez.is_finite() && ez > 0.0) {
            return Err(Error::invalid("derived eps_xy/eps_z must be positive"));
        }
        Ok(())
    }

    /// `w_xy²/(4·R_xy)`.
    pub fn eps_xy(&self) -> f64 {
        self.w_xy * self.w_xy / (4.0 * self.r_xy)
    }

    /// `w_z²/(4·R_z)`.
    pub fn eps_z(&self) -> f64 {
        self.w_z * self.w_z / (4.0 * self.r_z)
    }

    pub fn samples_per_orbit(&self) -> usize {
        (self.t_orbit / self.clock).round() as usize
    }

    pub fn samples_per_bin(&self) -> usize {
        self.samples_per_orbit() / self.n_bins
    }

    /// Per-plane centre rates `(I_top,C, I_bottom,C)` such that a locked
    /// emitter yields `total` detected counts/s summed over both planes, split
    /// according to `G`.
    pub fn plane_rates_for_brightness(&self, total: f64) -> (f64, f64) {
        let transverse = (-2.0 * self.r_xy * self.r_xy / (self.w_xy * self.w_xy)).exp();
        let axial = (-2.0 * self.r_z * self.r_z / (self.w_z * self.w_z)).exp();
        let per_plane = 0.5 * total / (transverse * axial);
        (per_plane * (1.0 - self.g), per_plane * (1.0 + self.g))
    }
}
