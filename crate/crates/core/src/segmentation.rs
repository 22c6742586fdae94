//! Directed-motion detection with the directionality ratio `γ = d/l` and
//! per-class anomalous-exponent statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{ensure_positive, Error, Result};
use crate::media::{Point3, Trajectory};
use crate::rheology::{anomalous_exponent, msd, AxisSet, MsdOptions};
use crate::stats::{mean, std_dev};

pub const DEFAULT_WINDOW: usize = 75;
pub const DEFAULT_MIN_LENGTH_NM: f64 = 500.0;
const TABLE_POINTS: usize = 2048;
const QUAD_INTERVALS: usize = 4096;

fn dist(a: &Point3, b: &Point3, dims: usize) -> f64 {
    (0..dims).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

/// `|end − start| / Σ|step|` over the first `dims` coordinates. `None` when
/// the path length is zero.
pub fn directionality_ratio(window: &[Point3], dims: usize) -> Result<Option<f64>> {
    if window.len() < 2 {
        return Err(Error::NotEnoughData("window needs >= 2 points".into()));
    }
    if !(1..=3).contains(&dims) {
        return Err(Error::invalid(format!("dims must be 1, 2 or 3, got {dims}")));
    }
    let l: f64 = window.windows(2).map(|w| dist(&w[0], &w[1], dims)).sum();
    if l <= 0.0 {
        return Ok(None);
    }
    let d = dist(&window[0], &window[window.len() - 1], dims);
    Ok(Some((d / l).min(1.0)))
}

/// Mean and standard deviation of the chi distribution with `m` degrees of
/// freedom.
pub fn chi_moments(m: usize) -> (f64, f64) {
    let mf = m as f64;
    let mu = std::f64::consts::SQRT_2 * gamma((mf + 1.0) / 2.0) / gamma(mf / 2.0);
    (mu, (mf - mu * mu).sqrt())
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Non-central t with `nu` degrees of freedom and non-centrality `lambda`,
/// evaluated by Simpson quadrature over the chi-distributed denominator.
#[derive(Debug, Clone)]
struct NoncentralT {
    nu: f64,
    lambda: f64,
    nodes: Vec<(f64, f64)>,
}

impl NoncentralT {
    fn new(nu: usize, lambda: f64, intervals: usize) -> Self {
        let nuf = nu as f64;
        let s_max = nuf.sqrt() + 12.0;
        let h = s_max / intervals as f64;
        let log_norm = (nuf / 2.0 - 1.0) * std::f64::consts::LN_2 + ln_gamma(nuf / 2.0);
        let nodes = (0..=intervals)
            .map(|i| {
                let s = i as f64 * h;
                let w = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let dens = if s == 0.0 {
                    if nu == 1 { (-log_norm).exp() } else { 0.0 }
                } else {
                    ((nuf - 1.0) * s.ln() - 0.5 * s * s - log_norm).exp()
                };
                (s, w * h / 3.0 * dens)
            })
            .collect();
        Self { nu: nuf, lambda, nodes }
    }

    fn pdf(&self, t: f64) -> f64 {
        let k = 1.0 / self.nu.sqrt();
        self.nodes
            .iter()
            .map(|&(s, w)| w * std_normal_pdf(t * s * k - self.lambda) * s * k)
            .sum()
    }

    fn cdf(&self, t: f64) -> f64 {
        let k = 1.0 / self.nu.sqrt();
        self.nodes
            .iter()
            .map(|&(s, w)| w * std_normal_cdf(t * s * k - self.lambda))
            .sum()
    }
}

/// Null distribution of `γ` for Brownian windows of `n` steps in `m`
/// dimensions, from the non-central t approximation of the inverse ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaNull {
    pub n: usize,
    pub m: usize,
    pub confidence: f64,
    pub mu_chi: f64,
    pub sigma_chi: f64,
    /// Table abscissae on (0, 1].
    pub gammas: Vec<f64>,
    pub pdf: Vec<f64>,
    pub critical_gamma: f64,
    /// Probability the approximation assigns to `γ > 1` (small for long
    /// windows, not representable by the table).
    pub mass_above_one: f64,
}

impl GammaNull {
    /// Interpolated density at `g`; zero outside (0, 1].
    pub fn pdf_at(&self, g: f64) -> f64 {
        if !(g > 0.0 && g <= 1.0) {
            return 0.0;
        }
        if g <= self.gammas[0] {
            return self.pdf[0] * g / self.gammas[0];
        }
        crate::stats::interp_linear(&self.gammas, &self.pdf, g)
    }

    /// Trapezoidal integral of the tabulated density.
    pub fn total_mass(&self) -> f64 {
        let mut acc = 0.5 * self.gammas[0] * self.pdf[0];
        for i in 1..self.gammas.len() {
            acc += 0.5 * (self.gammas[i] - self.gammas[i - 1]) * (self.pdf[i] + self.pdf[i - 1]);
        }
        acc
    }
}

pub fn gamma_null(n: usize, m: usize, confidence: f64) -> Result<GammaNull> {
    if n < 2 {
        return Err(Error::invalid(format!("window must have >= 2 steps, got {n}")));
    }
    if !(1..=3).contains(&m) {
        return Err(Error::invalid(format!("dimensions must be 1, 2 or 3, got {m}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let (mu, sigma) = chi_moments(m);
    let lambda = (n as f64).sqrt() * mu / sigma;
    let nct = NoncentralT::new(m, lambda, QUAD_INTERVALS);
    let scale = (m as f64).sqrt() / sigma;

    // γ = scale/η; the upper γ tail is the lower η tail
    let target = 1.0 - confidence;
    let (mut lo, mut hi) = (1e-9, lambda.max(1.0));
    while nct.cdf(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonConvergence("critical value bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if nct.cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let critical_gamma = scale / (0.5 * (lo + hi));

    let gammas: Vec<f64> = (1..=TABLE_POINTS).map(|i| i as f64 / TABLE_POINTS as f64).collect();
    let pdf: Vec<f64> = gammas
        .par_iter()
        .map(|&g| scale / (g * g) * nct.pdf(scale / g))
        .collect();
    let mass_above_one = nct.cdf(scale);
    let out = GammaNull {
        n,
        m,
        confidence,
        mu_chi: mu,
        sigma_chi: sigma,
        gammas,
        pdf,
        critical_gamma,
        mass_above_one,
    };
    let mass = out.total_mass();
    if (mass + mass_above_one - 1.0).abs() > 1e-3 {
        return Err(Error::NonConvergence(format!(
            "gamma density integrates to {mass}"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionClass {
    Directed,
    NonDirected,
}

impl MotionClass {
    pub fn as_str(self) -> &'static str {
        match self {
            MotionClass::Directed => "directed",
            MotionClass::NonDirected => "non-directed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLabel {
    /// First and last point index (inclusive).
    pub start: usize,
    pub end: usize,
    /// Largest window γ for directed segments, the segment's own `d/l`
    /// otherwise (NaN when the path length is zero).
    pub gamma: f64,
    pub class: MotionClass,
    pub displacement_nm: f64,
    pub alpha: Option<f64>,
}

impl SegmentLabel {
    pub fn n_points(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Contiguous labels covering the whole trajectory.
    pub labels: Vec<SegmentLabel>,
    /// γ per window start; `None` for zero path length.
    pub window_gammas: Vec<Option<f64>>,
    pub undefined_windows: usize,
    /// Fraction of defined windows above the critical value.
    pub supra_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptions {
    /// Window length in steps.
    pub window: usize,
    pub min_length_nm: f64,
    /// Fit α on each labelled segment.
    pub fit_alpha: bool,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            min_length_nm: DEFAULT_MIN_LENGTH_NM,
            fit_alpha: true,
        }
    }
}

/// Lags (in samples) used for a segment's exponent fit: from 2 up to a
/// quarter of the segment, between 5 and 20.
pub fn alpha_lags(n_points: usize) -> Vec<usize> {
    let hi = (n_points / 4).clamp(5, 20);
    (2..=hi).collect()
}

fn segment_alpha(traj: &Trajectory, start: usize, end: usize, dims: usize) -> Option<f64> {
    let n = end - start + 1;
    if n < 8 {
        return None;
    }
    let seg = traj.slice(start, end).ok()?;
    let lags: Vec<usize> = alpha_lags(n).into_iter().filter(|&l| l < n).collect();
    if lags.len() < 4 {
        return None;
    }
    let axes = AxisSet([true, dims >= 2, dims >= 3]);
    let c = msd(&seg, axes, &lags, &MsdOptions::default()).ok()?;
    let hi = *c.taus.last()?;
    anomalous_exponent(&c, 0.0, hi).ok().map(|f| f.alpha)
}

/// Sliding-window (stride 1) directed-motion test. Overlapping
/// supra-threshold windows merge into one candidate; candidates shorter than
/// `min_length_nm` end to end stay non-directed.
pub fn segment(traj: &Trajectory, null: &GammaNull, opts: &SegmentOptions) -> Result<Segmentation> {
    ensure_positive("min_length", opts.min_length_nm)?;
    let w = opts.window;
    if w < 2 {
        return Err(Error::invalid("window must span >= 2 steps"));
    }
    if traj.len() < w + 1 {
        return Err(Error::NotEnoughData(format!(
            "trajectory of {} points is shorter than one window of {w} steps",
            traj.len()
        )));
    }
    let dims = null.m;
    let pts = &traj.points;
    let n_windows = pts.len() - w;
    let window_gammas: Vec<Option<f64>> = (0..n_windows)
        .into_par_iter()
        .map(|i| directionality_ratio(&pts[i..=i + w], dims))
        .collect::<Result<_>>()?;
    let undefined_windows = window_gammas.iter().filter(|g| g.is_none()).count();
    let defined = n_windows - undefined_windows;
    let supra: Vec<bool> = window_gammas
        .iter()
        .map(|g| g.is_some_and(|v| v > null.critical_gamma))
        .collect();
    let supra_fraction = if defined == 0 {
        0.0
    } else {
        supra.iter().filter(|&&s| s).count() as f64 / defined as f64
    };

    // union of overlapping supra-threshold windows
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &s) in supra.iter().enumerate() {
        if !s {
            continue;
        }
        let g = window_gammas[i].unwrap_or(0.0);
        match runs.last_mut() {
            Some(r) if i <= r.1 => {
                r.1 = r.1.max(i + w);
                r.2 = r.2.max(g);
            }
            _ => runs.push((i, i + w, g)),
        }
    }
    let directed: Vec<(usize, usize, f64)> = runs
        .into_iter()
        .filter(|&(a, b, _)| dist(&pts[a], &pts[b], dims) >= opts.min_length_nm)
        .collect();

    let mut labels = Vec::new();
    let push_plain = |a: usize, b: usize, labels: &mut Vec<SegmentLabel>| {
        if b <= a {
            return;
        }
        let g = directionality_ratio(&pts[a..=b], dims).ok().flatten().unwrap_or(f64::NAN);
        labels.push(SegmentLabel {
            start: a,
            end: b,
            gamma: g,
            class: MotionClass::NonDirected,
            displacement_nm: dist(&pts[a], &pts[b], dims),
            alpha: None,
        });
    };
    let mut cursor = 0;
    for &(a, b, g) in &directed {
        push_plain(cursor, a, &mut labels);
        labels.push(SegmentLabel {
            start: a,
            end: b,
            gamma: g,
            class: MotionClass::Directed,
            displacement_nm: dist(&pts[a], &pts[b], dims),
            alpha: None,
        });
        cursor = b;
    }
    push_plain(cursor, pts.len() - 1, &mut labels);
    if opts.fit_alpha {
        labels
            .par_iter_mut()
            .for_each(|l| l.alpha = segment_alpha(traj, l.start, l.end, dims));
    }
    Ok(Segmentation {
        labels,
        window_gammas,
        undefined_windows,
        supra_fraction,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub class: MotionClass,
    pub alphas: Vec<f64>,
    /// Normal fit to the α values.
    pub mean: f64,
    pub sd: f64,
    /// Only one segment contributed; `sd` is reported as 0.
    pub degenerate: bool,
    /// Ensemble-averaged MSD over the class segments.
    pub taus: Vec<f64>,
    pub msd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassExponents {
    pub classes: Vec<ClassSummary>,
    pub notices: Vec<String>,
}

impl ClassExponents {
    pub fn get(&self, class: MotionClass) -> Option<&ClassSummary> {
        self.classes.iter().find(|c| c.class == class)
    }
}

/// Per-class α distributions and ensemble MSDs from labelled segments
/// (`dims` axes). Segments shorter than 8 points are skipped; classes with no
/// usable segment are omitted with a notice.
pub fn class_exponents(traj: &Trajectory, labels: &[SegmentLabel], dims: usize) -> Result<ClassExponents> {
    if !(1..=3).contains(&dims) {
        return Err(Error::invalid("dims must be 1, 2 or 3"));
    }
    let axes = AxisSet([true, dims >= 2, dims >= 3]);
    let mut out = ClassExponents::default();
    for class in [MotionClass::NonDirected, MotionClass::Directed] {
        let segs: Vec<&SegmentLabel> = labels
            .iter()
            .filter(|l| l.class == class && l.n_points() >= 8 && l.end < traj.len())
            .collect();
        let alphas: Vec<f64> = segs
            .iter()
            .filter_map(|l| l.alpha.or_else(|| segment_alpha(traj, l.start, l.end, dims)))
            .collect();
        if alphas.is_empty() {
            out.notices.push(format!("class {} omitted: no segment of >= 8 points", class.as_str()));
            continue;
        }
        let max_lag = segs.iter().map(|l| (l.n_points() - 1) / 4).min().unwrap_or(1).clamp(1, 100);
        let lags: Vec<usize> = (1..=max_lag).collect();
        let mut acc = vec![0.0; lags.len()];
        let mut count = 0;
        for l in &segs {
            let seg = traj.slice(l.start, l.end)?;
            if let Ok(c) = msd(&seg, axes, &lags, &MsdOptions::default()) {
                for (a, v) in acc.iter_mut().zip(&c.msd) {
                    *a += v;
                }
                count += 1;
            }
        }
        let degenerate = alphas.len() == 1;
        if degenerate {
            out.notices.push(format!("class {}: single segment, sd set to 0", class.as_str()));
        }
        out.classes.push(ClassSummary {
            class,
            mean: mean(&alphas),
            sd: if degenerate { 0.0 } else { std_dev(&alphas) },
            degenerate,
            taus: lags.iter().map(|&l| l as f64 * traj.dt).collect(),
            msd: acc.iter().map(|v| v / count.max(1) as f64).collect(),
            alphas,
        });
    }
    Ok(out)
}
