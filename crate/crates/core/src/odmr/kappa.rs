use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stats::{mean, std_dev, weighted_line_fit};

/// Linear shift-to-temperature calibration `δf = κ·(T − t_ref) + f0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaCalibration {
    /// kHz/°C
    pub kappa: f64,
    pub sigma_kappa: f64,
    /// Shift at `t_ref` (Hz).
    pub f0: f64,
    /// °C
    pub t_ref: f64,
}

/// Shifts (Hz) measured while the substrate sat at one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaLevel {
    pub temperature_c: f64,
    pub shifts: Vec<f64>,
}

/// Weighted regression of the mean shift per level on temperature, with
/// each level weighted by its standard error.
pub fn calibrate_kappa(levels: &[KappaLevel]) -> Result<KappaCalibration> {
    let mut temps: Vec<f64> = levels.iter().map(|l| l.temperature_c).collect();
    temps.sort_by(f64::total_cmp);
    temps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if temps.len() < 3 {
        return Err(Error::NotEnoughData(format!(
            "kappa calibration needs >= 3 distinct temperatures, got {}",
            temps.len()
        )));
    }
    let (mut x, mut y, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for l in levels {
        if l.shifts.len() < 2 {
            return Err(Error::NotEnoughData(format!(
                "level at {} °C needs >= 2 shifts",
                l.temperature_c
            )));
        }
        let se = std_dev(&l.shifts) / (l.shifts.len() as f64).sqrt();
        x.push(l.temperature_c);
        y.push(mean(&l.shifts));
        w.push(if se > 0.0 { se.powi(-2) } else { 1.0 });
    }
    let t_ref = temps[0];
    let xc: Vec<f64> = x.iter().map(|t| t - t_ref).collect();
    let fit = weighted_line_fit(&xc, &y, &w)?;
    Ok(KappaCalibration {
        kappa: fit.slope / 1e3,
        sigma_kappa: fit.slope_err / 1e3,
        f0: fit.intercept,
        t_ref,
    })
}

/// `ΔT = δf/κ` with `σ_ΔT` from `σ_δf` and `σ_κ` in quadrature.
pub fn shift_to_temperature(df: f64, sigma_df: f64, cal: &KappaCalibration) -> Result<(f64, f64)> {
    if cal.kappa == 0.0 || !cal.kappa.is_finite() {
        return Err(Error::invalid("kappa must be finite and non-zero"));
    }
    let k = cal.kappa * 1e3;
    let dt = df / k;
    let sigma = ((sigma_df / k).powi(2) + (dt * cal.sigma_kappa / cal.kappa).powi(2)).sqrt();
    Ok((dt, sigma))
}

/// Posterior of the difference between two group means.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPosterior {
    pub mean: f64,
    pub sd: f64,
    pub ci95: (f64, f64),
    pub samples: Vec<f64>,
}

const TAU_GRID: usize = 2000;

/// Draws of a group's population mean under `y_j ~ N(θ_j, σ_j²)`,
/// `θ_j ~ N(m, τ²)`, flat priors on `m` and on `τ ∈ [0, τ_max]`.
fn group_mean_draws(group: &[(f64, f64)], n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let ys: Vec<f64> = group.iter().map(|g| g.0).collect();
    let smax = group.iter().map(|g| g.1).fold(0.0, f64::max);
    let spread = ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min);
    let tau_max = 10.0 * (spread + smax);
    let conditional = |tau: f64| {
        let (mut sw, mut swy) = (0.0, 0.0);
        for &(y, s) in group {
            let w = 1.0 / (s * s + tau * tau);
            sw += w;
            swy += w * y;
        }
        (swy / sw, 1.0 / sw)
    };
    let taus: Vec<f64> = (0..TAU_GRID).map(|i| (i as f64 + 0.5) / TAU_GRID as f64 * tau_max).collect();
    let logp: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            let (m, v) = conditional(tau);
            0.5 * v.ln()
                + group
                    .iter()
                    .map(|&(y, s)| {
                        let var = s * s + tau * tau;
                        -0.5 * var.ln() - 0.5 * (y - m).powi(2) / var
                    })
                    .sum::<f64>()
        })
        .collect();
    let top = logp.iter().cloned().fold(f64::MIN, f64::max);
    let mut cdf: Vec<f64> = logp.iter().map(|l| (l - top).exp()).collect();
    for i in 1..cdf.len() {
        cdf[i] += cdf[i - 1];
    }
    let total = *cdf.last().unwrap();
    let cell = tau_max / TAU_GRID as f64;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let i = cdf.partition_point(|&c| c < u).min(TAU_GRID - 1);
            let tau = (taus[i] + (rng.random::<f64>() - 0.5) * cell).max(0.0);
            let (m, v) = conditional(tau);
            Normal::new(m, v.sqrt()).map(|d| d.sample(rng)).unwrap_or(m)
        })
        .collect()
}

fn check_group(name: &str, g: &[(f64, f64)]) -> Result<()> {
    if g.len() < 2 {
        return Err(Error::NotEnoughData(format!("group {name} needs >= 2 entries")));
    }
    if g.iter().any(|&(y, s)| !y.is_finite() || !(s > 0.0) || !s.is_finite()) {
        return Err(Error::invalid(format!(
            "group {name}: every entry needs a finite value and sigma > 0"
        )));
    }
    Ok(())
}

/// Posterior of `mean_live − mean_dry` for two groups of `(κ, σ)`
/// measurements under independent hierarchical normal models, by direct
/// Monte Carlo: between-diamond spread from its gridded marginal, then the
/// group mean from its normal conditional.
pub fn kappa_shift_posterior(live: &[(f64, f64)], dry: &[(f64, f64)], n_samples: usize, seed: u64) -> Result<ShiftPosterior> {
    check_group("live", live)?;
    check_group("dry", dry)?;
    if n_samples < 10 {
        return Err(Error::invalid("need >= 10 posterior samples"));
    }
    let a = group_mean_draws(live, n_samples, &mut substream(seed, "posterior", 0));
    let b = group_mean_draws(dry, n_samples, &mut substream(seed, "posterior", 1));
    let samples: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((p * (n_samples - 1) as f64).round() as usize).min(n_samples - 1)];
    Ok(ShiftPosterior {
        mean: mean(&samples),
        sd: std_dev(&samples),
        ci95: (q(0.025), q(0.975)),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_levels() {
        let levels: Vec<KappaLevel> = (0..4)
            .map(|i| {
                let t = 24.0 + 4.0 * i as f64;
                let base = -60e3 * (t - 24.0) + 1234.0;
                KappaLevel { temperature_c: t, shifts: vec![base - 10.0, base + 10.0] }
            })
            .collect();
        let cal = calibrate_kappa(&levels).unwrap();
        assert!((cal.kappa + 60.0).abs() < 1e-9);
        assert!((cal.f0 - 1234.0).abs() < 1e-6);
        assert!(calibrate_kappa(&levels[..2]).is_err());
    }

    #[test]
    fn shift_conversion() {
        let cal = KappaCalibration { kappa: -60.0, sigma_kappa: 0.0, f0: 0.0, t_ref: 25.0 };
        let (dt, _) = shift_to_temperature(-240e3, 0.0, &cal).unwrap();
        assert!((dt - 4.0).abs() < 1e-12);
        assert_eq!(shift_to_temperature(0.0, 0.0, &cal).unwrap().0, 0.0);
        let wide = KappaCalibration { kappa: -91.0, ..cal };
        assert!((shift_to_temperature(-240e3, 0.0, &wide).unwrap().0 - 2.637362637).abs() < 1e-6);
        let zero = KappaCalibration { kappa: 0.0, ..cal };
        assert!(shift_to_temperature(1.0, 0.0, &zero).is_err());
        let noisy = KappaCalibration { sigma_kappa: 0.4, ..cal };
        let (_, s) = shift_to_temperature(-240e3, 6e3, &noisy).unwrap();
        assert!((s - ((0.1f64).powi(2) + (4.0 * 0.4 / 60.0f64).powi(2)).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn posterior_symmetry_and_recovery() {
        let g = vec![(-60.0, 2.0), (-58.0, 2.0), (-63.0, 2.0), (-61.0, 2.0)];
        let p = kappa_shift_posterior(&g, &g, 20_000, 1).unwrap();
        assert!(p.mean.abs() < 4.0 * p.sd / (20_000f64).sqrt() + 0.05, "{}", p.mean);
        let live: Vec<(f64, f64)> = g.iter().map(|&(k, s)| (k + 30.0, s)).collect();
        let p = kappa_shift_posterior(&live, &g, 20_000, 2).unwrap();
        assert!(p.ci95.0 > 0.0);
        assert!(kappa_shift_posterior(&g[..1], &g, 100, 1).is_err());
        assert!(kappa_shift_posterior(&[(1.0, 0.0), (1.0, 0.0)], &g, 100, 1).is_err());
    }
}
