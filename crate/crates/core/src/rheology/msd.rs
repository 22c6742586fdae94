use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::Trajectory;

/// System noise floor on MSD uncertainties, 10⁻⁴ µm² = 100 nm².
pub const DEFAULT_NOISE_FLOOR_NM2: f64 = 100.0;

/// Selection of spatial axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisSet(pub [bool; 3]);

impl AxisSet {
    pub const X: AxisSet = AxisSet([true, false, false]);
    pub const Y: AxisSet = AxisSet([false, true, false]);
    pub const Z: AxisSet = AxisSet([false, false, true]);
    pub const XY: AxisSet = AxisSet([true, true, false]);
    pub const XYZ: AxisSet = AxisSet([true, true, true]);

    pub fn dims(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(move |&i| self.0[i])
    }

    pub fn parse(s: &str) -> Result<AxisSet> {
        let mut set = [false; 3];
        for ch in s.chars() {
            let i = match ch.to_ascii_lowercase() {
                'x' => 0,
                'y' => 1,
                'z' => 2,
                _ => return Err(Error::invalid(format!("unknown axis '{ch}' in \"{s}\""))),
            };
            set[i] = true;
        }
        if set == [false; 3] {
            return Err(Error::invalid("empty axis selection"));
        }
        Ok(AxisSet(set))
    }
}

/// Variance estimator for the time-averaged MSD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceEstimator {
    /// Gaussian (Isserlis) covariance-of-products estimator:
    /// `Var ≈ (2/K²)·[K·ĉ₀² + 2·Σ_{j=1}^{τ−1} (K−j)·ĉ_j²]` with
    /// `ĉ_j = (1/(K−j))·Σ_a ξ(a+j)·ξ(a)`, minus the first-order bias of the
    /// squared sample covariances.
    #[default]
    Isserlis,
    /// Literal form with the product squared inside the average:
    /// `(4/K)·Σ_{i=1}^{τ} (1/(K−i))·Σ_a [ξ(i+a)·ξ(a)]²`.
    /// Overestimates the Brownian variance roughly five-fold.
    Printed,
    /// No variance; fill in from an ensemble with [`ensemble_variance`].
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsdOptions {
    pub estimator: VarianceEstimator,
    /// Uncertainty floor (nm²).
    pub noise_floor_nm2: f64,
}

impl Default for MsdOptions {
    fn default() -> Self {
        Self {
            estimator: VarianceEstimator::Isserlis,
            noise_floor_nm2: DEFAULT_NOISE_FLOOR_NM2,
        }
    }
}

/// Time-averaged MSD indexed by lag time.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdCurve {
    /// Lag times (s), strictly increasing.
    pub taus: Vec<f64>,
    /// Lags in samples.
    pub lags: Vec<usize>,
    /// MSD summed over the selected axes (nm²).
    pub msd: Vec<f64>,
    /// Statistical variance of each MSD value (nm⁴).
    pub var: Vec<f64>,
    /// Number of pair-wise differences `K = N − τ` per lag.
    pub n_samples: Vec<usize>,
    /// Number of axes summed.
    pub dims: usize,
    pub noise_floor_nm2: f64,
}

impl MsdCurve {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Reported uncertainty (nm²): the statistical error, replaced by the
    /// noise floor whenever the error or the MSD itself is below it.
    pub fn sigma(&self, i: usize) -> f64 {
        let sd = self.var[i].max(0.0).sqrt();
        if sd < self.noise_floor_nm2 || self.msd[i] < self.noise_floor_nm2 {
            self.noise_floor_nm2.max(sd)
        } else {
            sd
        }
    }

    /// Indices whose lag time lies in `[lo, hi]`.
    pub fn range_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        let eps = 1e-12 * hi.abs().max(1.0);
        (0..self.len())
            .filter(|&i| self.taus[i] >= lo - eps && self.taus[i] <= hi + eps)
            .collect()
    }
}

/// `n` log-spaced distinct integer lags in `[1, max_lag]`.
pub fn log_lags(max_lag: usize, n: usize) -> Vec<usize> {
    if max_lag == 0 || n == 0 {
        return Vec::new();
    }
    let mut lags: Vec<usize> = (0..n)
        .map(|i| {
            let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            (max_lag as f64).powf(f).round() as usize
        })
        .collect();
    lags.dedup();
    lags
}

pub fn linear_lags(max_lag: usize) -> Vec<usize> {
    (1..=max_lag).collect()
}

/// Unnormalised autocorrelation `R(j) = Σ_a s(a+j)·s(a)` for `j < max_lag`.
fn autocorr(s: &[f64], max_lag: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let k = s.len();
    let max_lag = max_lag.min(k);
    if max_lag * k <= 1 << 16 {
        return (0..max_lag)
            .map(|j| s[j..].iter().zip(s).map(|(a, b)| a * b).sum())
            .collect();
    }
    let m = (2 * k).next_power_of_two();
    let mut buf: Vec<Complex64> = s
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    planner.plan_fft_forward(m).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.iter().take(max_lag).map(|c| c.re / m as f64).collect()
}

/// `T_j = Σ_m c_{m+j}·c_{m−j}` for `j < c.len()`, with `c_{−m} = c_m` and
/// `c_m = 0` for `|m| ≥ c.len()`.
fn paired_products(c: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = c.len();
    let e: Vec<f64> = (0..2 * n - 1)
        .map(|i| c[(i as isize - (n as isize - 1)).unsigned_abs()])
        .collect();
    let at = |k: usize| -> usize { k + 2 * (n - 1) };
    if n <= 256 {
        return (0..n)
            .map(|j| {
                let k = at(2 * j);
                let lo = k.saturating_sub(e.len() - 1);
                let hi = k.min(e.len() - 1);
                (lo..=hi).map(|i| e[i] * e[k - i]).sum()
            })
            .collect();
    }
    let m = (2 * e.len()).next_power_of_two();
    let mut buf: Vec<Complex64> = e
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    planner.plan_fft_forward(m).process(&mut buf);
    for z in buf.iter_mut() {
        *z = *z * *z;
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    (0..n)
        .map(|j| {
            let k = at(2 * j);
            if k < m { buf[k].re / m as f64 } else { 0.0 }
        })
        .collect()
}

fn lag_variance(xi: &[f64], lag: usize, estimator: VarianceEstimator, planner: &mut FftPlanner<f64>) -> f64 {
    let k = xi.len();
    let kf = k as f64;
    match estimator {
        VarianceEstimator::None => 0.0,
        VarianceEstimator::Isserlis => {
            let r = autocorr(xi, lag, planner);
            let c: Vec<f64> = r.iter().enumerate().map(|(j, rj)| rj / (k - j) as f64).collect();
            let mut acc = kf * c[0] * c[0];
            for (j, cj) in c.iter().enumerate().skip(1) {
                acc += 2.0 * (k - j) as f64 * cj * cj;
            }
            // E[ĉ_j²] = c_j² + Var(ĉ_j) with Var(ĉ_j) ≈ (S + T_j)/(K−j),
            // S = Σ_m c_m², T_j = Σ_m c_{m+j}·c_{m−j}.
            let s_sum = c[0] * c[0] + 2.0 * c[1..].iter().map(|v| v * v).sum::<f64>();
            let t = paired_products(&c, planner);
            let bias = 2.0 * s_sum + 2.0 * t[1..].iter().map(|tj| s_sum + tj).sum::<f64>();
            (2.0 * (acc - bias) / (kf * kf)).max(0.0)
        }
        VarianceEstimator::Printed => {
            let sq: Vec<f64> = xi.iter().map(|v| v * v).collect();
            let r = autocorr(&sq, lag + 1, planner);
            let acc: f64 = (1..=lag.min(k - 1))
                .map(|i| r[i] / (k - i) as f64)
                .sum();
            4.0 * acc / kf
        }
    }
}

/// Time-averaged MSD over the selected axes at the given lags (in samples),
/// with per-lag variance. Axis MSDs and variances are summed.
pub fn msd(traj: &Trajectory, axes: AxisSet, lags: &[usize], opts: &MsdOptions) -> Result<MsdCurve> {
    traj.require_analysable()?;
    let n = traj.len();
    if lags.is_empty() {
        return Err(Error::invalid("no lags requested"));
    }
    if axes.dims() == 0 {
        return Err(Error::invalid("empty axis selection"));
    }
    for w in lags.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("lags must be strictly increasing"));
        }
    }
    if lags[0] == 0 {
        return Err(Error::invalid("lag 0 is not allowed"));
    }
    if let Some(&bad) = lags.iter().find(|&&l| l >= n) {
        return Err(Error::invalid(format!("lag {bad} >= trajectory length {n}")));
    }
    let series: Vec<Vec<f64>> = axes.indices().map(|a| traj.axis(a)).collect();
    let mut planner = FftPlanner::new();
    let mut msd_v = Vec::with_capacity(lags.len());
    let mut var_v = Vec::with_capacity(lags.len());
    let mut xi = Vec::with_capacity(n);
    for &lag in lags {
        let (mut m_sum, mut v_sum) = (0.0, 0.0);
        for s in &series {
            xi.clear();
            xi.extend(s[lag..].iter().zip(s).map(|(a, b)| a - b));
            m_sum += xi.iter().map(|v| v * v).sum::<f64>() / xi.len() as f64;
            v_sum += lag_variance(&xi, lag, opts.estimator, &mut planner);
        }
        msd_v.push(m_sum);
        var_v.push(v_sum);
    }
    Ok(MsdCurve {
        taus: lags.iter().map(|&l| l as f64 * traj.dt).collect(),
        lags: lags.to_vec(),
        msd: msd_v,
        var: var_v,
        n_samples: lags.iter().map(|&l| n - l).collect(),
        dims: axes.dims(),
        noise_floor_nm2: opts.noise_floor_nm2,
    })
}

/// Ensemble-mean MSD with the empirical inter-trajectory variance of each
/// lag as the variance estimate. All curves must share the same lags.
pub fn ensemble_variance(curves: &[MsdCurve]) -> Result<MsdCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::NotEnoughData("empty MSD ensemble".into()))?;
    if curves.len() < 2 {
        return Err(Error::NotEnoughData("ensemble variance needs >= 2 curves".into()));
    }
    if curves.iter().any(|c| c.lags != first.lags || c.dims != first.dims) {
        return Err(Error::invalid("ensemble curves have different lags or dims"));
    }
    let nc = curves.len() as f64;
    let mut out = first.clone();
    for i in 0..first.len() {
        let vals: Vec<f64> = curves.iter().map(|c| c.msd[i]).collect();
        let m = vals.iter().sum::<f64>() / nc;
        out.msd[i] = m;
        out.var[i] = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nc - 1.0);
    }
    Ok(out)
}
