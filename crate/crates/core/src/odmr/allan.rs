use crate::error::{ensure_positive, Error, Result};
use crate::stats::weighted_line_fit;

#[derive(Debug, Clone, PartialEq)]
pub struct AllanCurve {
    pub taus: Vec<f64>,
    pub adev: Vec<f64>,
    /// Number of overlapping differences behind each value.
    pub n_terms: Vec<usize>,
}

/// Overlapping Allan deviation of a series sampled every `tau0` seconds at
/// averaging factors `m` (τ = m·τ0). Factors above `N/3` are dropped.
pub fn allan_deviation(series: &[f64], tau0: f64, factors: &[usize]) -> Result<AllanCurve> {
    ensure_positive("tau0", tau0)?;
    let n = series.len();
    if n < 3 {
        return Err(Error::NotEnoughData("Allan deviation needs >= 3 samples".into()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for v in series {
        cum.push(cum.last().unwrap() + v);
    }
    let mut out = AllanCurve { taus: Vec::new(), adev: Vec::new(), n_terms: Vec::new() };
    for &m in factors {
        if m == 0 || 3 * m > n {
            continue;
        }
        let terms = n - 2 * m + 1;
        let mut acc = 0.0;
        for j in 0..terms {
            let a = cum[j + m] - cum[j];
            let b = cum[j + 2 * m] - cum[j + m];
            acc += (b - a).powi(2);
        }
        let var = acc / (2.0 * (m * m) as f64 * terms as f64);
        out.taus.push(m as f64 * tau0);
        out.adev.push(var.sqrt());
        out.n_terms.push(terms);
    }
    if out.taus.is_empty() {
        return Err(Error::NotEnoughData("no averaging factor within N/3".into()));
    }
    Ok(out)
}

/// Octave-spaced averaging factors up to `n/3`.
pub fn octave_factors(n: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut m = 1;
    while 3 * m <= n {
        v.push(m);
        m *= 2;
    }
    v
}

/// White-noise fit `σ_A = S/√τ` over `[tau_lo, tau_hi]`: `S` is the
/// geometric mean of `σ_A·√τ`; also returns the free log-log slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhiteNoiseFit {
    /// Units of the series times √s (e.g. °C/√Hz).
    pub sensitivity: f64,
    pub slope: f64,
}

pub fn fit_white_noise(curve: &AllanCurve, tau_lo: f64, tau_hi: f64) -> Result<WhiteNoiseFit> {
    let idx: Vec<usize> = (0..curve.taus.len())
        .filter(|&i| curve.taus[i] >= tau_lo && curve.taus[i] <= tau_hi && curve.adev[i] > 0.0)
        .collect();
    if idx.len() < 2 {
        return Err(Error::NotEnoughData("white-noise fit needs >= 2 points".into()));
    }
    let x: Vec<f64> = idx.iter().map(|&i| curve.taus[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| curve.adev[i].ln()).collect();
    // more differences, smaller scatter
    let w: Vec<f64> = idx.iter().map(|&i| curve.n_terms[i] as f64).collect();
    let sw: f64 = w.iter().sum();
    let log_s = x.iter().zip(&y).zip(&w).map(|((a, b), w)| w * (b + 0.5 * a)).sum::<f64>() / sw;
    let slope = weighted_line_fit(&x, &y, &w)?.slope;
    Ok(WhiteNoiseFit { sensitivity: log_s.exp(), slope })
}
