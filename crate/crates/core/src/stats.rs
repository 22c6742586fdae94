//! Small statistics helpers shared by the analysis modules.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n − 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Excess kurtosis (population moments).
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Straight-line fit result `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Reduced chi-square of the weighted residuals.
    pub reduced_chi2: f64,
}

/// Weighted least-squares line. `weights` are inverse variances; pass all
/// ones for an ordinary fit. Parameter errors come from the inverse normal
/// matrix (absolute weights).
pub fn weighted_line_fit(x: &[f64], y: &[f64], weights: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n || weights.len() != n {
        return Err(Error::NotEnoughData(format!(
            "line fit needs >= 2 matching points, got {n}"
        )));
    }
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(weights) {
        sw += wi;
        swx += wi * xi;
        swy += wi * yi;
        swxx += wi * xi * xi;
        swxy += wi * xi * yi;
    }
    let det = sw * swxx - swx * swx;
    if !(det.abs() > 0.0) {
        return Err(Error::invalid("degenerate abscissa in line fit"));
    }
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swxx * swy - swx * swxy) / det;
    let chi2: f64 = x
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((&xi, &yi), &wi)| wi * (yi - intercept - slope * xi).powi(2))
        .sum();
    let dof = (n as f64 - 2.0).max(1.0);
    Ok(LineFit {
        slope,
        intercept,
        slope_err: (sw / det).sqrt(),
        intercept_err: (swxx / det).sqrt(),
        reduced_chi2: chi2 / dof,
    })
}

/// Weighted least-squares slope through the origin, `y = slope·x`.
/// Returns `(slope, slope_err)`.
pub fn weighted_origin_fit(x: &[f64], y: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() || y.len() != x.len() || weights.len() != x.len() {
        return Err(Error::NotEnoughData("origin fit needs matching points".into()));
    }
    let sxx: f64 = x.iter().zip(weights).map(|(&xi, &w)| w * xi * xi).sum();
    let sxy: f64 = x
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((&xi, &yi), &w)| w * xi * yi)
        .sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("degenerate abscissa in origin fit"));
    }
    Ok((sxy / sxx, (1.0 / sxx).sqrt()))
}

/// Linear interpolation on a strictly increasing grid; clamps outside.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}
