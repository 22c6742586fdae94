//! Fractional Brownian motion by circulant embedding (Davies–Harte).

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{simulate_brownian, Trajectory};
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::rng::rng_from_seed;

/// Anomalous-diffusion medium with per-axis MSD `2·K_α·τ^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscoelasticModel {
    /// Anomalous exponent, `0 < α ≤ 2`.
    pub alpha: f64,
    /// Generalised diffusion amplitude (nm²/s^α).
    pub k_alpha: f64,
}

impl ViscoelasticModel {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("alpha", self.alpha)?;
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidModel(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        ensure_finite("K_alpha", self.k_alpha)?;
        if self.k_alpha < 0.0 {
            return Err(Error::InvalidModel("K_alpha must be >= 0".into()));
        }
        Ok(())
    }

    pub fn hurst(&self) -> f64 {
        self.alpha / 2.0
    }
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Square roots of the circulant eigenvalues (scaled by `1/√m`) for `n`
/// increments. Tiny negative eigenvalues from round-off are clamped.
fn circulant_sqrt_eigs(n: usize, hurst: f64, planner: &mut FftPlanner<f64>) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|j| {
            let k = if j <= n { j } else { m - j };
            Complex64::new(fgn_autocov(k, hurst), 0.0)
        })
        .collect();
    planner.plan_fft_forward(m).process(&mut row);
    let scale = m as f64;
    row.iter()
        .map(|c| {
            let lambda = c.re;
            if lambda < -1e-8 * scale {
                Err(Error::InvalidModel(format!(
                    "circulant embedding not positive (eigenvalue {lambda})"
                )))
            } else {
                Ok((lambda.max(0.0) / scale).sqrt())
            }
        })
        .collect()
}

/// Fractional Brownian motion with Hurst exponent `α/2`, independent per
/// axis. `α = 1` is delegated to [`simulate_brownian`] with `D = K_α`, so the
/// Brownian limit is exact rather than statistical.
pub fn simulate_viscoelastic(
    model: &ViscoelasticModel,
    n_steps: usize,
    dt: f64,
    seed: u64,
) -> Result<Trajectory> {
    model.validate()?;
    ensure_positive("dt", dt)?;
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be >= 1"));
    }
    if model.alpha == 1.0 {
        let mut t = simulate_brownian(model.k_alpha, n_steps, dt, seed)?;
        t.set_meta("medium", "fbm");
        t.set_meta("alpha", model.alpha);
        return Ok(t);
    }
    let hurst = model.hurst();
    // per-axis increment variance so that MSD(τ) = 2 K_α τ^α
    let step_sd = (2.0 * model.k_alpha * dt.powf(model.alpha)).sqrt();
    let mut planner = FftPlanner::new();
    let sqrt_eigs = circulant_sqrt_eigs(n_steps, hurst, &mut planner)?;
    let m = sqrt_eigs.len();
    let fft = planner.plan_fft_forward(m);
    let mut rng = rng_from_seed(seed);

    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for _ in 0..3 {
        for (b, &s) in buf.iter_mut().zip(&sqrt_eigs) {
            let a: f64 = StandardNormal.sample(&mut rng);
            let c: f64 = StandardNormal.sample(&mut rng);
            *b = Complex64::new(s * a, s * c);
        }
        fft.process(&mut buf);
        let mut pos = 0.0;
        let mut path = Vec::with_capacity(n_steps + 1);
        path.push(0.0);
        for b in buf.iter().take(n_steps) {
            pos += step_sd * b.re;
            path.push(pos);
        }
        axes.push(path);
    }
    let points = (0..=n_steps)
        .map(|i| [axes[0][i], axes[1][i], axes[2][i]])
        .collect();
    let mut traj = Trajectory::new(dt, 0.0, points)?;
    traj.set_meta("seed", seed);
    traj.set_meta("medium", "fbm");
    traj.set_meta("alpha", model.alpha);
    traj.set_meta("K_alpha", model.k_alpha);
    Ok(traj)
}
