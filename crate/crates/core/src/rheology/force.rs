use std::f64::consts::PI;

use super::{ComplexModulus, Psd};
use crate::error::{ensure_positive, Error, Result};
use crate::units::{thermal_energy, NM, NM2};

/// Thermal force density `4·k_B·T·K″(ω)/ω` (N²/Hz), one-sided, with
/// `K″ = 6π·r·G″` in N/m.
pub fn thermal_force_psd(omega: f64, k_dprime: f64, t_k: f64) -> f64 {
    4.0 * thermal_energy(t_k) * k_dprime / omega
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceSpectrum {
    /// rad/s
    pub omegas: Vec<f64>,
    /// N²/Hz
    pub thermal: Vec<f64>,
    /// N²/Hz, clipped at zero.
    pub external: Vec<f64>,
    /// N/m
    pub k_abs: Vec<f64>,
    /// External power was negative before clipping.
    pub clipped: Vec<bool>,
}

impl ForceSpectrum {
    /// Mean of `|external|/thermal` over `[w_lo, w_hi]`.
    pub fn band_ratio(&self, w_lo: f64, w_hi: f64) -> f64 {
        let r: Vec<f64> = self
            .omegas
            .iter()
            .enumerate()
            .filter(|(_, &w)| w >= w_lo && w <= w_hi)
            .map(|(i, _)| self.external[i].abs() / self.thermal[i])
            .collect();
        r.iter().sum::<f64>() / r.len() as f64
    }
}

/// External force spectrum `|K|²·⟨x²⟩ − ⟨ξ²⟩` on the PSD frequencies that
/// lie inside the modulus grid. The position PSD is taken per axis.
pub fn external_force_spectrum(psd: &Psd, modulus: &ComplexModulus, r_nm: f64, t_k: f64) -> Result<ForceSpectrum> {
    ensure_positive("radius", r_nm)?;
    ensure_positive("temperature", t_k)?;
    let r = r_nm * NM;
    let per_axis = psd.per_axis();
    let mut out = ForceSpectrum {
        omegas: Vec::new(),
        thermal: Vec::new(),
        external: Vec::new(),
        k_abs: Vec::new(),
        clipped: Vec::new(),
    };
    for (f, x2) in psd.freqs.iter().zip(&per_axis) {
        let Some((gp, gpp)) = modulus.at(*f) else { continue };
        let omega = 2.0 * PI * f;
        let k_abs = 6.0 * PI * r * gp.hypot(gpp);
        let thermal = thermal_force_psd(omega, 6.0 * PI * r * gpp, t_k);
        let ext = k_abs * k_abs * x2 * NM2 - thermal;
        out.omegas.push(omega);
        out.thermal.push(thermal);
        out.external.push(ext.max(0.0));
        out.k_abs.push(k_abs);
        out.clipped.push(ext < 0.0);
    }
    if out.omegas.is_empty() {
        return Err(Error::invalid(
            "PSD and modulus frequency grids do not overlap",
        ));
    }
    Ok(out)
}
