use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::MsdCurve;
use crate::error::{ensure_positive, Error, Result};
use crate::units::{thermal_energy, NM, NM2};

/// Complex shear modulus sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexModulus {
    /// Hz, strictly increasing.
    pub freqs: Vec<f64>,
    /// Pa
    pub g_abs: Vec<f64>,
    pub g_prime: Vec<f64>,
    pub g_dprime: Vec<f64>,
    /// Local log-log slope of the MSD.
    pub alpha: Vec<f64>,
    /// Loss tangent angle (rad).
    pub delta: Vec<f64>,
    /// Points whose local slope left `[0, 2]`.
    pub flagged: Vec<bool>,
}

impl ComplexModulus {
    pub fn from_components(freqs: Vec<f64>, g_prime: Vec<f64>, g_dprime: Vec<f64>) -> Result<Self> {
        if freqs.len() != g_prime.len() || freqs.len() != g_dprime.len() || freqs.is_empty() {
            return Err(Error::invalid("modulus components must be non-empty and equal length"));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) || freqs[0] <= 0.0 {
            return Err(Error::invalid("modulus frequencies must be positive and increasing"));
        }
        let g_abs: Vec<f64> = g_prime.iter().zip(&g_dprime).map(|(a, b)| a.hypot(*b)).collect();
        let delta: Vec<f64> = g_prime.iter().zip(&g_dprime).map(|(a, b)| b.atan2(*a)).collect();
        let alpha = delta.iter().map(|d| 2.0 * d / PI).collect();
        let n = freqs.len();
        Ok(Self {
            freqs,
            g_abs,
            g_prime,
            g_dprime,
            alpha,
            delta,
            flagged: vec![false; n],
        })
    }

    /// Newtonian liquid of viscosity `eta` (Pa·s): `G* = i·η·2πf`.
    pub fn viscous(freqs: Vec<f64>, eta: f64) -> Result<Self> {
        ensure_positive("eta", eta)?;
        let gpp = freqs.iter().map(|f| eta * 2.0 * PI * f).collect();
        let n = freqs.len();
        Self::from_components(freqs, vec![0.0; n], gpp)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// `(G′, G″)` at frequency `f`, interpolating `ln|G*|` and the phase
    /// linearly in `ln f`. `None` outside the sampled range.
    pub fn at(&self, f: f64) -> Option<(f64, f64)> {
        let n = self.len();
        if n == 0 || !(f > 0.0) {
            return None;
        }
        let lo = self.freqs[0];
        let hi = self.freqs[n - 1];
        let tol = 1e-9;
        if f < lo * (1.0 - tol) || f > hi * (1.0 + tol) {
            return None;
        }
        let (mag, ph) = if n == 1 {
            (self.g_abs[0], self.delta[0])
        } else {
            let lf = f.ln().clamp(lo.ln(), hi.ln());
            let j = self.freqs.partition_point(|&x| x.ln() <= lf).clamp(1, n - 1);
            let (x0, x1) = (self.freqs[j - 1].ln(), self.freqs[j].ln());
            let t = (lf - x0) / (x1 - x0);
            let (m0, m1) = (self.g_abs[j - 1], self.g_abs[j]);
            let mag = if m0 > 0.0 && m1 > 0.0 {
                (m0.ln() + t * (m1.ln() - m0.ln())).exp()
            } else {
                m0 + t * (m1 - m0)
            };
            (mag, self.delta[j - 1] + t * (self.delta[j] - self.delta[j - 1]))
        };
        Some((mag * ph.cos(), mag * ph.sin()))
    }
}

/// Local log-log slope: centred differences inside, one-sided at the ends.
fn local_slopes(taus: &[f64], msd: &[f64]) -> Vec<f64> {
    let n = taus.len();
    let lt: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let lm: Vec<f64> = msd.iter().map(|m| m.ln()).collect();
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (lm[b] - lm[a]) / (lt[b] - lt[a])
        })
        .collect()
}

/// Generalised Stokes–Einstein estimate from a 2D MSD:
/// `|G*(f)| = k_B·T / (π·r·MSD(1/f)·Γ(1+α))`, phase `δ = απ/2`.
/// Curves with other dimensionality are rescaled to their 2D equivalent.
/// Returned frequencies are ascending (`f = 1/τ`).
pub fn complex_modulus(curve: &MsdCurve, t_k: f64, r_nm: f64) -> Result<ComplexModulus> {
    ensure_positive("temperature", t_k)?;
    ensure_positive("radius", r_nm)?;
    if curve.len() < 2 {
        return Err(Error::NotEnoughData("modulus needs >= 2 MSD points".into()));
    }
    if let Some(i) = curve.msd.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::invalid(format!(
            "non-positive MSD at tau = {} s",
            curve.taus[i]
        )));
    }
    let to_2d = 2.0 / curve.dims as f64;
    let alpha = local_slopes(&curve.taus, &curve.msd);
    let kt = thermal_energy(t_k);
    let r = r_nm * NM;
    let n = curve.len();
    let mut out = ComplexModulus {
        freqs: Vec::with_capacity(n),
        g_abs: Vec::with_capacity(n),
        g_prime: Vec::with_capacity(n),
        g_dprime: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        delta: Vec::with_capacity(n),
        flagged: Vec::with_capacity(n),
    };
    for i in (0..n).rev() {
        let a = alpha[i];
        let flagged = !(0.0..=2.0).contains(&a);
        let msd_m2 = curve.msd[i] * to_2d * NM2;
        let g = kt / (PI * r * msd_m2 * gamma(1.0 + a));
        let delta = a * PI / 2.0;
        out.freqs.push(1.0 / curve.taus[i]);
        out.g_abs.push(g);
        out.g_prime.push(g * delta.cos());
        out.g_dprime.push(g * delta.sin());
        out.alpha.push(a);
        out.delta.push(delta);
        out.flagged.push(flagged);
    }
    Ok(out)
}
