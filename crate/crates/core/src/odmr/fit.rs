use serde::{Deserialize, Serialize};

use super::lm::levenberg_marquardt;
use super::{Dip, Lineshape, OdmrScan};
use crate::error::{Error, Result};
use crate::stats::{mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftFitOptions {
    /// Shifts searched in `[-half_width, half_width]` (Hz).
    pub search_half_width: f64,
    /// Points of the coarse linear search.
    pub coarse_points: usize,
    /// Golden-section stopping width (Hz).
    pub tolerance: f64,
}

impl Default for ShiftFitOptions {
    fn default() -> Self {
        Self {
            search_half_width: 10.0e6,
            coarse_points: 201,
            tolerance: 1.0,
        }
    }
}

/// Two-parameter fit of `Λ0·L(f − δf)` to a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftFit {
    /// Off-resonance counts per sample per sweep.
    pub lambda0: f64,
    /// Hz
    pub df: f64,
    pub sigma_df: f64,
    pub converged: bool,
    /// Residual sum of squares (counts²).
    pub cost: f64,
}

struct Profile<'a> {
    scan: &'a OdmrScan,
    shape: &'a Lineshape,
}

impl Profile<'_> {
    /// Λ0 minimising the squared error at fixed δf, and that error.
    fn at(&self, df: f64) -> (f64, f64) {
        let n = self.scan.n_scans as f64;
        let (mut syl, mut sll) = (0.0, 0.0);
        for (&f, &y) in self.scan.freqs.iter().zip(&self.scan.counts) {
            let l = self.shape.level(f - df);
            syl += y * l;
            sll += l * l;
        }
        let lam = syl / (n * sll);
        let cost: f64 = self
            .scan
            .freqs
            .iter()
            .zip(&self.scan.counts)
            .map(|(&f, &y)| (y - n * lam * self.shape.level(f - df)).powi(2))
            .sum();
        (lam, cost)
    }
}

/// Least-squares `(Λ0, δf)` with the shape held fixed: Λ0 in closed form,
/// δf by a coarse linear search refined with golden-section minimisation.
/// `sigma_df` comes from the residual-scaled Jacobian covariance.
pub fn fit_shift(scan: &OdmrScan, shape: &Lineshape, opts: &ShiftFitOptions) -> Result<ShiftFit> {
    shape.validate()?;
    if !(opts.search_half_width > 0.0) || opts.coarse_points < 3 || !(opts.tolerance > 0.0) {
        return Err(Error::invalid("bad shift search options"));
    }
    if scan.counts.iter().all(|&c| c == 0.0) {
        return Err(Error::NoSignal);
    }
    let prof = Profile { scan, shape };
    let hw = opts.search_half_width;
    let step = 2.0 * hw / (opts.coarse_points - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..opts.coarse_points {
        let c = prof.at(-hw + i as f64 * step).1;
        if c < best.1 {
            best = (i, c);
        }
    }
    let at_edge = best.0 == 0 || best.0 == opts.coarse_points - 1;
    let centre = -hw + best.0 as f64 * step;
    let (mut a, mut b) = ((centre - step).max(-hw), (centre + step).min(hw));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = prof.at(x1).1;
    let mut f2 = prof.at(x2).1;
    while b - a > opts.tolerance {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = prof.at(x1).1;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = prof.at(x2).1;
        }
    }
    let df = 0.5 * (a + b);
    let (lambda0, cost) = prof.at(df);

    let n = scan.n_scans as f64;
    let (mut jaa, mut jab, mut jbb) = (0.0, 0.0, 0.0);
    for &f in &scan.freqs {
        let ja = n * shape.level(f - df);
        let jb = -n * lambda0 * shape.slope(f - df);
        jaa += ja * ja;
        jab += ja * jb;
        jbb += jb * jb;
    }
    let det = jaa * jbb - jab * jab;
    let dof = (scan.counts.len() as f64 - 2.0).max(1.0);
    let sigma_df = if det > 0.0 {
        (cost / dof * jaa / det).sqrt()
    } else {
        f64::NAN
    };
    Ok(ShiftFit {
        lambda0,
        df,
        sigma_df,
        converged: !at_edge && lambda0 > 0.0 && sigma_df.is_finite(),
        cost,
    })
}

/// Mean of consecutive groups of `n_f` converged shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedShift {
    pub df: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub n_used: usize,
    pub n_rejected: usize,
}

pub fn average_consecutive(fits: &[ShiftFit], n_f: usize) -> Result<Vec<AveragedShift>> {
    if n_f == 0 {
        return Err(Error::invalid("n_f must be >= 1"));
    }
    Ok(fits
        .chunks(n_f)
        .filter_map(|chunk| {
            let ok: Vec<&ShiftFit> = chunk.iter().filter(|f| f.converged).collect();
            let v: Vec<f64> = ok.iter().map(|f| f.df).collect();
            let se = match v.len() {
                0 => return None,
                1 => ok[0].sigma_df,
                k => std_dev(&v) / (k as f64).sqrt(),
            };
            Some(AveragedShift {
                df: mean(&v),
                se,
                n_used: v.len(),
                n_rejected: chunk.len() - v.len(),
            })
        })
        .collect())
}

/// Full-parameter Lorentzian fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianFit {
    pub lambda0: f64,
    pub shape: Lineshape,
    /// Shift of the fitted resonance position relative to the initial guess.
    pub df: f64,
    pub sigma_df: f64,
    pub converged: bool,
}

fn lorentzian_fit(
    scan: &OdmrScan,
    init: &Lineshape,
    lambda0: f64,
    pack: &dyn Fn(&Lineshape) -> Vec<f64>,
    unpack: &dyn Fn(&[f64]) -> Lineshape,
    centre_var: &dyn Fn(&nalgebra::DMatrix<f64>) -> f64,
) -> Result<LorentzianFit> {
    init.validate()?;
    let n = scan.n_scans as f64;
    let mut p0 = vec![lambda0];
    p0.extend(pack(init));
    let scales: Vec<f64> = p0
        .iter()
        .map(|v| if v.abs() > 1e3 { 1e5 } else { v.abs().max(1e-3) })
        .collect();
    let res = levenberg_marquardt(
        |p| {
            let shape = unpack(&p[1..]);
            if shape.validate().is_err() || p[0] <= 0.0 {
                return None;
            }
            Some(
                scan.freqs
                    .iter()
                    .zip(&scan.counts)
                    .map(|(&f, &y)| n * p[0] * shape.level(f) - y)
                    .collect(),
            )
        },
        &p0,
        &scales,
        200,
    );
    let shape = unpack(&res.params[1..]);
    let dof = (scan.counts.len() as f64 - p0.len() as f64).max(1.0);
    let sigma_df = res
        .jtj_inv
        .as_ref()
        .map(|c| (res.cost / dof * centre_var(c)).sqrt())
        .unwrap_or(f64::NAN);
    let valid = shape.validate().is_ok();
    Ok(LorentzianFit {
        lambda0: res.params[0],
        df: shape.center() - init.center(),
        shape,
        sigma_df,
        converged: res.converged && valid && sigma_df.is_finite(),
    })
}

/// Seven-parameter fit `Λ0·[1 − dip₁ − dip₂]` started from `init`.
pub fn fit_double_lorentzian(scan: &OdmrScan, init: &Lineshape, lambda0: f64) -> Result<LorentzianFit> {
    let Lineshape::DoubleLorentzian { .. } = init else {
        return Err(Error::invalid("initial shape must be a double Lorentzian"));
    };
    let pack = |s: &Lineshape| match s {
        Lineshape::DoubleLorentzian { dips } => dips
            .iter()
            .flat_map(|d| [d.contrast, d.hwhm, d.center])
            .collect(),
        _ => unreachable!(),
    };
    let unpack = |p: &[f64]| Lineshape::DoubleLorentzian {
        dips: [
            Dip { contrast: p[0], hwhm: p[1], center: p[2] },
            Dip { contrast: p[3], hwhm: p[4], center: p[5] },
        ],
    };
    // parameter order: Λ0, c1, w1, f1, c2, w2, f2; centre = (f1 + f2)/2
    let var = |c: &nalgebra::DMatrix<f64>| 0.25 * (c[(3, 3)] + c[(6, 6)] + 2.0 * c[(3, 6)]);
    lorentzian_fit(scan, init, lambda0, &pack, &unpack, &var)
}

/// Four-parameter fit `Λ0·[1 − dip]` started from `init`.
pub fn fit_single_lorentzian(scan: &OdmrScan, init: &Lineshape, lambda0: f64) -> Result<LorentzianFit> {
    let Lineshape::SingleLorentzian { .. } = init else {
        return Err(Error::invalid("initial shape must be a single Lorentzian"));
    };
    let pack = |s: &Lineshape| match s {
        Lineshape::SingleLorentzian { dip } => vec![dip.contrast, dip.hwhm, dip.center],
        _ => unreachable!(),
    };
    let unpack = |p: &[f64]| Lineshape::SingleLorentzian {
        dip: Dip { contrast: p[0], hwhm: p[1], center: p[2] },
    };
    let var = |c: &nalgebra::DMatrix<f64>| c[(3, 3)];
    lorentzian_fit(scan, init, lambda0, &pack, &unpack, &var)
}
