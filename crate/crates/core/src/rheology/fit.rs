use super::MsdCurve;
use crate::error::{Error, Result};
use crate::stats::{weighted_line_fit, weighted_origin_fit};

/// How the diffusion coefficient is read off the MSD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionFitMode {
    /// Weighted line through the origin over `[tau_min, tau_max]`.
    ThroughOrigin { tau_min: f64, tau_max: f64 },
    /// Weighted line with a free intercept (absorbs localisation noise and
    /// motion blur) over `[tau_min, tau_max]`.
    WithOffset { tau_min: f64, tau_max: f64 },
    /// `MSD(τ)/(2·dims·τ)` at the lag closest to `tau`.
    SingleLag { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionFit {
    /// nm²/s
    pub d: f64,
    pub sigma: f64,
    /// Every MSD value used lies below the noise floor.
    pub below_floor: bool,
}

/// Diffusion coefficient from `MSD = 2·dims·D·τ`.
pub fn fit_diffusion(curve: &MsdCurve, mode: DiffusionFitMode) -> Result<DiffusionFit> {
    let divisor = 2.0 * curve.dims as f64;
    let idx = match mode {
        DiffusionFitMode::ThroughOrigin { tau_min, tau_max }
        | DiffusionFitMode::WithOffset { tau_min, tau_max } => curve.range_indices(tau_min, tau_max),
        DiffusionFitMode::SingleLag { tau } => {
            let best = (0..curve.len())
                .min_by(|&a, &b| {
                    (curve.taus[a] - tau)
                        .abs()
                        .total_cmp(&(curve.taus[b] - tau).abs())
                })
                .ok_or_else(|| Error::NotEnoughData("empty MSD curve".into()))?;
            vec![best]
        }
    };
    if idx.is_empty() {
        return Err(Error::NotEnoughData("no MSD points in fit range".into()));
    }
    if let Some(&i) = idx.iter().find(|&&i| !(curve.msd[i] > 0.0)) {
        return Err(Error::invalid(format!(
            "non-positive MSD {} at tau = {} s",
            curve.msd[i], curve.taus[i]
        )));
    }
    let below_floor = idx.iter().all(|&i| curve.msd[i] < curve.noise_floor_nm2);
    let x: Vec<f64> = idx.iter().map(|&i| curve.taus[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| curve.msd[i]).collect();
    let w: Vec<f64> = idx.iter().map(|&i| curve.sigma(i).powi(-2)).collect();
    let (slope, slope_err) = match mode {
        DiffusionFitMode::SingleLag { .. } => (y[0] / x[0], curve.sigma(idx[0]) / x[0]),
        DiffusionFitMode::ThroughOrigin { .. } => weighted_origin_fit(&x, &y, &w)?,
        DiffusionFitMode::WithOffset { .. } => {
            if x.len() < 3 {
                return Err(Error::NotEnoughData(
                    "offset fit needs >= 3 MSD points".into(),
                ));
            }
            let f = weighted_line_fit(&x, &y, &w)?;
            (f.slope, f.slope_err)
        }
    };
    Ok(DiffusionFit {
        d: slope / divisor,
        sigma: slope_err / divisor,
        below_floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub alpha: f64,
    pub sigma: f64,
    /// Prefactor `A` of `MSD = A·τ^α` (nm²/s^α).
    pub amplitude: f64,
}

/// Slope of `ln MSD` against `ln τ` over `[tau_min, tau_max]`, weighted by
/// `MSD²/σ²` (the inverse variance of `ln MSD`).
pub fn anomalous_exponent(curve: &MsdCurve, tau_min: f64, tau_max: f64) -> Result<ExponentFit> {
    let idx = curve.range_indices(tau_min, tau_max);
    if idx.len() < 4 {
        return Err(Error::NotEnoughData(format!(
            "exponent fit needs >= 4 points in range, got {}",
            idx.len()
        )));
    }
    if let Some(&i) = idx.iter().find(|&&i| !(curve.msd[i] > 0.0)) {
        return Err(Error::invalid(format!(
            "non-positive MSD at tau = {} s",
            curve.taus[i]
        )));
    }
    let x: Vec<f64> = idx.iter().map(|&i| curve.taus[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| curve.msd[i].ln()).collect();
    let mut w: Vec<f64> = idx
        .iter()
        .map(|&i| (curve.msd[i] / curve.sigma(i)).powi(2))
        .collect();
    if w.iter().any(|v| !v.is_finite()) {
        w = vec![1.0; idx.len()];
    }
    let f = weighted_line_fit(&x, &y, &w)?;
    Ok(ExponentFit {
        alpha: f.slope,
        sigma: f.slope_err,
        amplitude: f.intercept.exp(),
    })
}
