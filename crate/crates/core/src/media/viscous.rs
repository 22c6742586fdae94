use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::units::{thermal_energy, NM};

/// Glycerol viscosity at 21 °C as quoted alongside the linear model (Pa·s).
///
/// The linear constants below do not reproduce this value for either sign
/// of the slope, so it is stored separately and never derived.
pub const GLYCEROL_ETA_21C: f64 = 0.919;

/// Sign applied to the magnitude of the printed viscosity slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeSign {
    Positive,
    Negative,
}

/// Viscosity linear in temperature, `η(T) = η0 + μ·(T − T_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscousMediumModel {
    /// Viscosity at the reference temperature (Pa·s).
    pub eta0: f64,
    /// Slope (Pa·s/°C), signed.
    pub mu: f64,
    /// Reference temperature (°C).
    pub t_ref: f64,
    /// Declared operating range (°C), inclusive.
    pub valid_range: (f64, f64),
}

impl ViscousMediumModel {
    pub fn new(eta0: f64, mu: f64, t_ref: f64, valid_range: (f64, f64)) -> Result<Self> {
        let m = Self {
            eta0,
            mu,
            t_ref,
            valid_range,
        };
        m.validate()?;
        Ok(m)
    }

    /// Glycerol constants as printed: η0 = 0.301 Pa·s at 35 °C with a slope
    /// magnitude of 0.0208 Pa·s/°C.
    pub fn glycerol(sign: SlopeSign) -> Self {
        let mu = match sign {
            SlopeSign::Positive => 0.0208,
            SlopeSign::Negative => -0.0208,
        };
        let valid_range = match sign {
            SlopeSign::Positive => (21.0, 45.0),
            SlopeSign::Negative => (15.0, 45.0),
        };
        Self {
            eta0: 0.301,
            mu,
            t_ref: 35.0,
            valid_range,
        }
    }

    /// Constant viscosity over a wide range.
    pub fn constant(eta: f64) -> Self {
        Self {
            eta0: eta,
            mu: 0.0,
            t_ref: 25.0,
            valid_range: (-50.0, 150.0),
        }
    }

    fn raw(&self, t_c: f64) -> f64 {
        self.eta0 + self.mu * (t_c - self.t_ref)
    }

    /// Positivity over the whole declared range (linear, so the end points
    /// suffice).
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta0", self.eta0),
            ("mu", self.mu),
            ("t_ref", self.t_ref),
            ("valid_range.0", self.valid_range.0),
            ("valid_range.1", self.valid_range.1),
        ] {
            ensure_finite(name, v)?;
        }
        let (lo, hi) = self.valid_range;
        if lo > hi {
            return Err(Error::InvalidModel(format!("empty validity range [{lo}, {hi}]")));
        }
        for t in [lo, hi] {
            if self.raw(t) <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "viscosity {} Pa·s at {t} °C is not positive",
                    self.raw(t)
                )));
            }
        }
        Ok(())
    }
}

/// Viscosity (Pa·s) at `t_c` (°C).
pub fn viscosity_at(model: &ViscousMediumModel, t_c: f64) -> Result<f64> {
    ensure_finite("T", t_c)?;
    let (lo, hi) = model.valid_range;
    if t_c < lo || t_c > hi {
        return Err(Error::invalid(format!(
            "temperature {t_c} °C outside model range [{lo}, {hi}]"
        )));
    }
    let eta = model.raw(t_c);
    if eta <= 0.0 {
        return Err(Error::InvalidModel(format!(
            "viscosity {eta} Pa·s at {t_c} °C is not positive"
        )));
    }
    Ok(eta)
}

/// Stokes–Einstein diffusion coefficient (nm²/s) for temperature `t_k` (K),
/// radius `r_nm` and viscosity `eta` (Pa·s).
pub fn stokes_einstein_d(t_k: f64, r_nm: f64, eta: f64) -> Result<f64> {
    ensure_positive("T", t_k)?;
    ensure_positive("r", r_nm)?;
    ensure_positive("eta", eta)?;
    let d_m2 = thermal_energy(t_k) / (6.0 * PI * r_nm * NM * eta);
    Ok(d_m2 * 1e18)
}

/// Inverse Stokes–Einstein: hydrodynamic radius (nm) from `d` (nm²/s).
pub fn hydrodynamic_radius(t_k: f64, d: f64, eta: f64) -> Result<f64> {
    ensure_positive("T", t_k)?;
    ensure_positive("D", d)?;
    ensure_positive("eta", eta)?;
    let r_m = thermal_energy(t_k) / (6.0 * PI * eta * d * 1e-18);
    Ok(r_m / NM)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_temperature_returns_eta0() {
        let m = ViscousMediumModel::glycerol(SlopeSign::Positive);
        assert_eq!(viscosity_at(&m, 35.0).unwrap(), 0.301);
        let m = ViscousMediumModel::glycerol(SlopeSign::Negative);
        assert_eq!(viscosity_at(&m, 35.0).unwrap(), 0.301);
    }

    #[test]
    fn zero_slope_is_constant_and_model_is_linear() {
        let m = ViscousMediumModel::constant(0.5);
        assert_eq!(viscosity_at(&m, 10.0).unwrap(), viscosity_at(&m, 40.0).unwrap());
        let g = ViscousMediumModel::glycerol(SlopeSign::Negative);
        let (a, b, c) = (
            viscosity_at(&g, 20.0).unwrap(),
            viscosity_at(&g, 30.0).unwrap(),
            viscosity_at(&g, 40.0).unwrap(),
        );
        assert!(((a + c) / 2.0 - b).abs() < 1e-12);
    }

    #[test]
    fn printed_constants_do_not_reproduce_quoted_21c_value() {
        for sign in [SlopeSign::Positive, SlopeSign::Negative] {
            let m = ViscousMediumModel::glycerol(sign);
            let eta = m.eta0 + m.mu * (21.0 - m.t_ref);
            assert!((eta - GLYCEROL_ETA_21C).abs() > 0.3);
        }
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ViscousMediumModel::new(0.3, 0.1, 35.0, (0.0, 40.0)).is_err());
        let m = ViscousMediumModel::glycerol(SlopeSign::Positive);
        assert!(viscosity_at(&m, 10.0).is_err());
    }

    #[test]
    fn stokes_einstein_reference_value() {
        // k_B·T/(6π·r·η) evaluated independently:
        // 1.380649e-23 * 294.15 / (6π · 25e-9 · 0.919) = 9.37768e-15 m²/s
        let d = stokes_einstein_d(294.15, 25.0, 0.919).unwrap();
        assert!((d - 9377.68).abs() < 0.01, "D = {d}");
        let d2 = stokes_einstein_d(294.15, 25.0, 2.0 * 0.919).unwrap();
        assert!((d2 * 2.0 - d).abs() < 1e-9 * d);
        assert!(stokes_einstein_d(0.0, 25.0, 1.0).is_err());
        assert!(stokes_einstein_d(300.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn radius_round_trip() {
        let d = stokes_einstein_d(300.0, 28.0, 0.4).unwrap();
        let r = hydrodynamic_radius(300.0, d, 0.4).unwrap();
        assert!((r - 28.0).abs() < 1e-9);
    }
}
