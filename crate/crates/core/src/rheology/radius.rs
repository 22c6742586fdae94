use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{stokes_einstein_d, viscosity_at, ViscousMediumModel};
use crate::units::celsius_to_kelvin;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureDiffusionPoint {
    pub temperature_c: f64,
    /// nm²/s
    pub d: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusFit {
    pub r_nm: f64,
    pub sigma_nm: f64,
    pub chi2_reduced: f64,
}

/// Weighted least squares of `D(T) = k_B·T/(6π·r·η(T))` over `r`.
/// The model is linear in `1/r`, so the fit is closed form. The reported
/// error is inflated by `√χ²_red` when the scatter exceeds the stated errors.
pub fn fit_hydrodynamic_radius(points: &[TemperatureDiffusionPoint], medium: &ViscousMediumModel) -> Result<RadiusFit> {
    if points.len() < 3 {
        return Err(Error::NotEnoughData(format!(
            "radius fit needs >= 3 temperatures, got {}",
            points.len()
        )));
    }
    let mut sw_ad = 0.0;
    let mut sw_aa = 0.0;
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        if !(p.sigma > 0.0) || !p.d.is_finite() {
            return Err(Error::invalid(format!(
                "point at {} °C needs finite D and sigma > 0",
                p.temperature_c
            )));
        }
        let eta = viscosity_at(medium, p.temperature_c)?;
        let a = stokes_einstein_d(celsius_to_kelvin(p.temperature_c), 1.0, eta)?;
        let w = p.sigma.powi(-2);
        sw_ad += w * a * p.d;
        sw_aa += w * a * a;
        rows.push((a, p.d, w));
    }
    let inv_r = sw_ad / sw_aa;
    if !(inv_r > 0.0) {
        return Err(Error::invalid("fit gives non-physical radius"));
    }
    let chi2: f64 = rows.iter().map(|(a, d, w)| w * (d - a * inv_r).powi(2)).sum();
    let chi2_reduced = chi2 / (rows.len() - 1) as f64;
    let sigma_inv = (1.0 / sw_aa).sqrt() * chi2_reduced.max(1.0).sqrt();
    Ok(RadiusFit {
        r_nm: 1.0 / inv_r,
        sigma_nm: sigma_inv / (inv_r * inv_r),
        chi2_reduced,
    })
}
