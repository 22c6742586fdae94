use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::AxisSet;
use crate::error::{ensure_positive, Error, Result};
use crate::media::Trajectory;
use crate::stats::interp_linear;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdOptions {
    /// Welch segment length (s).
    pub segment_s: f64,
}

impl Default for PsdOptions {
    fn default() -> Self {
        Self { segment_s: 1.0 }
    }
}

/// One-sided position PSD summed over the selected axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    /// Hz, from 0 to Nyquist.
    pub freqs: Vec<f64>,
    /// nm²/Hz
    pub density: Vec<f64>,
    pub dims: usize,
    pub segments: usize,
}

impl Psd {
    pub fn df(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Linear interpolation, clamped at the ends.
    pub fn value_at(&self, f: f64) -> f64 {
        interp_linear(&self.freqs, &self.density, f)
    }

    /// Per-axis density (total divided by the number of axes).
    pub fn per_axis(&self) -> Vec<f64> {
        self.density.iter().map(|d| d / self.dims as f64).collect()
    }
}

/// Welch estimate: Hann window, 50 % overlap, per-segment mean removal.
pub fn psd(traj: &Trajectory, axes: AxisSet, opts: &PsdOptions) -> Result<Psd> {
    ensure_positive("segment length", opts.segment_s)?;
    traj.require_analysable()?;
    let nseg = (opts.segment_s / traj.dt).round() as usize;
    if nseg < 4 {
        return Err(Error::invalid(format!(
            "segment of {} s is shorter than 4 samples",
            opts.segment_s
        )));
    }
    let step = nseg / 2;
    let n = traj.len();
    if n < nseg + step {
        return Err(Error::NotEnoughData(format!(
            "trajectory of {n} samples holds fewer than 2 Welch segments of {nseg}"
        )));
    }
    let count = (n - nseg) / step + 1;
    let window: Vec<f64> = (0..nseg)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nseg as f64).cos())
        .collect();
    let fs = 1.0 / traj.dt;
    let scale = 1.0 / (fs * window.iter().map(|w| w * w).sum::<f64>());
    let nf = nseg / 2 + 1;
    let fft = FftPlanner::new().plan_fft_forward(nseg);
    let mut acc = vec![0.0; nf];
    let mut buf = vec![Complex64::new(0.0, 0.0); nseg];
    for a in axes.indices() {
        let x = traj.axis(a);
        for s in 0..count {
            let seg = &x[s * step..s * step + nseg];
            let m = seg.iter().sum::<f64>() / nseg as f64;
            for ((b, v), w) in buf.iter_mut().zip(seg).zip(&window) {
                *b = Complex64::new((v - m) * w, 0.0);
            }
            fft.process(&mut buf);
            for (k, slot) in acc.iter_mut().enumerate() {
                let one_sided = if k == 0 || (nseg.is_multiple_of(2) && k == nseg / 2) { 1.0 } else { 2.0 };
                *slot += one_sided * scale * buf[k].norm_sqr();
            }
        }
    }
    Ok(Psd {
        freqs: (0..nf).map(|k| k as f64 * fs / nseg as f64).collect(),
        density: acc.iter().map(|v| v / count as f64).collect(),
        dims: axes.dims(),
        segments: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::simulate_brownian;

    #[test]
    fn sinusoid_power_sits_at_its_frequency() {
        let (amp, f0, dt) = (7.0, 50.0, 1e-3);
        let pts = (0..20_000)
            .map(|i| [amp * (2.0 * PI * f0 * i as f64 * dt).sin(), 0.0, 0.0])
            .collect();
        let t = Trajectory::new(dt, 0.0, pts).unwrap();
        let p = psd(&t, AxisSet::X, &PsdOptions { segment_s: 1.0 }).unwrap();
        let peak = (0..p.freqs.len()).max_by(|&a, &b| p.density[a].total_cmp(&p.density[b])).unwrap();
        assert!((p.freqs[peak] - f0).abs() < 1e-9);
        let power: f64 = p.density.iter().sum::<f64>() * p.df();
        assert!((power / (amp * amp / 2.0) - 1.0).abs() < 0.02, "{power}");
    }

    #[test]
    fn parseval_on_noise() {
        let t = simulate_brownian(1e3, 40_000, 1e-3, 3).unwrap();
        let white = Trajectory::new(1e-3, 0.0, (0..40_000).map(|i| {
            let a = t.points[i + 1][0] - t.points[i][0];
            [a, 0.0, 0.0]
        }).collect()).unwrap();
        let p = psd(&white, AxisSet::X, &PsdOptions { segment_s: 0.5 }).unwrap();
        let power: f64 = p.density.iter().sum::<f64>() * p.df();
        let var = crate::stats::variance(&white.axis(0));
        assert!((power / var - 1.0).abs() < 0.05, "{power} vs {var}");
    }

    #[test]
    fn rejects_short_input() {
        let t = simulate_brownian(1e3, 100, 1e-3, 3).unwrap();
        assert!(psd(&t, AxisSet::X, &PsdOptions { segment_s: 0.08 }).is_err());
        assert!(psd(&t, AxisSet::X, &PsdOptions { segment_s: 0.05 }).is_ok());
    }
}
