use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Dip, Lineshape, ScanTiming};
use crate::error::{ensure_positive, Error, Result};

/// Which parameters are estimated alongside the shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrbParams {
    /// δf alone, Λ0 known.
    ShiftOnly,
    /// (Λ0, δf) with the shape as a fixed template.
    #[default]
    AmplitudeAndShift,
    /// Every free parameter of the model (7 for a double Lorentzian, 4 for
    /// a single one); tables fall back to (Λ0, δf).
    Full,
}

/// Cramér–Rao bound for one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbBound {
    pub names: Vec<&'static str>,
    pub fisher: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    pub shift_index: usize,
}

impl CrbBound {
    /// Lower bound on the standard deviation of δf for one sweep (Hz).
    pub fn shift_sd(&self) -> f64 {
        self.covariance[(self.shift_index, self.shift_index)].sqrt()
    }

    /// The bound for `n` independent sweeps.
    pub fn shift_sd_for(&self, n_scans: f64) -> f64 {
        self.shift_sd() / n_scans.sqrt()
    }
}

type Derivs = (Vec<&'static str>, usize, Vec<Box<dyn Fn(f64) -> f64>>);

fn derivatives(shape: &Lineshape, lambda0: f64, params: CrbParams) -> Derivs {
    let s = shape.clone();
    let dmu_dshift: Box<dyn Fn(f64) -> f64> = Box::new(move |f| -lambda0 * s.slope(f));
    let s = shape.clone();
    let dmu_dlambda: Box<dyn Fn(f64) -> f64> = Box::new(move |f| s.level(f));
    match (params, shape) {
        (CrbParams::ShiftOnly, _) => (vec!["df"], 0, vec![dmu_dshift]),
        (CrbParams::AmplitudeAndShift, _) | (CrbParams::Full, Lineshape::Table(_)) => {
            (vec!["lambda0", "df"], 1, vec![dmu_dlambda, dmu_dshift])
        }
        (CrbParams::Full, Lineshape::DoubleLorentzian { dips }) => {
            let dips = *dips;
            let mut v: Vec<Box<dyn Fn(f64) -> f64>> = vec![dmu_dlambda];
            // contrast and width of each dip, then the common shift and the splitting
            for k in 0..2 {
                for which in 0..2 {
                    v.push(Box::new(move |f| {
                        let mut up = dips;
                        let mut dn = dips;
                        let h = if which == 0 { 1e-6 } else { 1e-3 * dips[k].hwhm };
                        if which == 0 {
                            up[k].contrast += h;
                            dn[k].contrast -= h;
                        } else {
                            up[k].hwhm += h;
                            dn[k].hwhm -= h;
                        }
                        lambda0
                            * (Lineshape::DoubleLorentzian { dips: up }.level(f)
                                - Lineshape::DoubleLorentzian { dips: dn }.level(f))
                            / (2.0 * h)
                    }));
                }
            }
            v.push(dmu_dshift);
            v.push(Box::new(move |f| {
                let h = 1e-3 * dips[0].hwhm;
                let mv = |d: Dip, s: f64| Dip { center: d.center + s, ..d };
                let up = [mv(dips[0], -h / 2.0), mv(dips[1], h / 2.0)];
                let dn = [mv(dips[0], h / 2.0), mv(dips[1], -h / 2.0)];
                lambda0
                    * (Lineshape::DoubleLorentzian { dips: up }.level(f)
                        - Lineshape::DoubleLorentzian { dips: dn }.level(f))
                    / (2.0 * h)
            }));
            (vec!["lambda0", "c1", "w1", "c2", "w2", "df", "splitting"], 5, v)
        }
        (CrbParams::Full, Lineshape::SingleLorentzian { dip }) => {
            let dip = *dip;
            let mut v: Vec<Box<dyn Fn(f64) -> f64>> = vec![dmu_dlambda];
            for which in 0..2 {
                v.push(Box::new(move |f| {
                    let (mut up, mut dn) = (dip, dip);
                    let h = if which == 0 { 1e-6 } else { 1e-3 * dip.hwhm };
                    if which == 0 {
                        up.contrast += h;
                        dn.contrast -= h;
                    } else {
                        up.hwhm += h;
                        dn.hwhm -= h;
                    }
                    lambda0
                        * (Lineshape::SingleLorentzian { dip: up }.level(f)
                            - Lineshape::SingleLorentzian { dip: dn }.level(f))
                        / (2.0 * h)
                }));
            }
            v.push(dmu_dshift);
            (vec!["lambda0", "contrast", "hwhm", "df"], 3, v)
        }
    }
}

/// Fisher information of one sweep with Poisson counts of mean
/// `Λ0·L(f_i)`: `I_jk = Σ_i ∂_jμ_i·∂_kμ_i/μ_i`.
pub fn fisher_matrix(shape: &Lineshape, lambda0: f64, freqs: &[f64], params: CrbParams) -> Result<(Vec<&'static str>, usize, DMatrix<f64>)> {
    shape.validate()?;
    ensure_positive("lambda0", lambda0)?;
    if freqs.is_empty() {
        return Err(Error::invalid("empty frequency grid"));
    }
    let (names, shift_index, d) = derivatives(shape, lambda0, params);
    let k = d.len();
    let mut fm = DMatrix::zeros(k, k);
    for &f in freqs {
        let mu = lambda0 * shape.level(f);
        let g: Vec<f64> = d.iter().map(|df| df(f)).collect();
        for a in 0..k {
            for b in a..k {
                let v = g[a] * g[b] / mu;
                fm[(a, b)] += v;
                if a != b {
                    fm[(b, a)] += v;
                }
            }
        }
    }
    Ok((names, shift_index, fm))
}

pub fn crb(shape: &Lineshape, lambda0: f64, freqs: &[f64], params: CrbParams) -> Result<CrbBound> {
    let (names, shift_index, fisher) = fisher_matrix(shape, lambda0, freqs, params)?;
    // scale-free test on the correlation form of the matrix
    let k = fisher.nrows();
    let diag: Vec<f64> = (0..k).map(|i| fisher[(i, i)]).collect();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::SingularInformation(format!(
            "no information on {}",
            names[diag.iter().position(|d| !(*d > 0.0)).unwrap_or(0)]
        )));
    }
    let corr = DMatrix::from_fn(k, k, |i, j| fisher[(i, j)] / (diag[i] * diag[j]).sqrt());
    let min = corr.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-12) {
        return Err(Error::SingularInformation(format!(
            "parameters not separately identifiable (smallest normalised eigenvalue {min:e})"
        )));
    }
    let covariance = fisher
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularInformation("Fisher matrix not invertible".into()))?;
    Ok(CrbBound { names, fisher, covariance, shift_index })
}

/// Temperature sensitivity (°C/√Hz) implied by the per-sweep shift bound,
/// counting only the sweeps that fit in the microwave window.
pub fn crb_temperature_sensitivity(bound: &CrbBound, kappa_khz_per_c: f64, timing: &ScanTiming) -> Result<f64> {
    timing.validate()?;
    if kappa_khz_per_c == 0.0 || !kappa_khz_per_c.is_finite() {
        return Err(Error::invalid("kappa must be finite and non-zero"));
    }
    Ok(bound.shift_sd_for(timing.scans_per_second()) / (kappa_khz_per_c.abs() * 1e3))
}
