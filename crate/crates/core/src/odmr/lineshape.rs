use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// One Lorentzian dip: `contrast·w²/((f − center)² + w²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dip {
    pub contrast: f64,
    /// Half width at half maximum (Hz).
    pub hwhm: f64,
    /// Hz
    pub center: f64,
}

impl Dip {
    fn depth(&self, f: f64) -> f64 {
        let x = f - self.center;
        self.contrast * self.hwhm * self.hwhm / (x * x + self.hwhm * self.hwhm)
    }

    fn depth_slope(&self, f: f64) -> f64 {
        let x = f - self.center;
        let d = x * x + self.hwhm * self.hwhm;
        -2.0 * self.contrast * self.hwhm * self.hwhm * x / (d * d)
    }

    fn validate(&self) -> Result<()> {
        ensure_finite("contrast", self.contrast)?;
        ensure_positive("hwhm", self.hwhm)?;
        ensure_finite("center", self.center)?;
        if !(0.0..1.0).contains(&self.contrast) {
            return Err(Error::InvalidModel(format!(
                "dip contrast must lie in [0, 1), got {}",
                self.contrast
            )));
        }
        Ok(())
    }
}

/// Tabulated normalised levels, linearly interpolated; 1 outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationTable {
    pub freqs: Vec<f64>,
    pub levels: Vec<f64>,
}

/// Normalised ODMR lineshape, `L → 1` off resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lineshape {
    DoubleLorentzian { dips: [Dip; 2] },
    SingleLorentzian { dip: Dip },
    Table(InterpolationTable),
}

impl Lineshape {
    /// Strain-split nanodiamond spectrum used as the default synthetic
    /// shape: two unequal dips 6 MHz apart around 2870 MHz.
    pub fn default_double() -> Self {
        Lineshape::DoubleLorentzian {
            dips: [
                Dip { contrast: 0.105, hwhm: 5.0e6, center: 2867.0e6 },
                Dip { contrast: 0.089, hwhm: 5.5e6, center: 2873.0e6 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Lineshape::DoubleLorentzian { dips } => {
                dips[0].validate()?;
                dips[1].validate()?;
                if dips[0].contrast + dips[1].contrast >= 1.0 {
                    return Err(Error::InvalidModel("summed contrast must be < 1".into()));
                }
                Ok(())
            }
            Lineshape::SingleLorentzian { dip } => dip.validate(),
            Lineshape::Table(t) => {
                if t.freqs.len() < 2 || t.freqs.len() != t.levels.len() {
                    return Err(Error::InvalidModel("table needs >= 2 matching points".into()));
                }
                if t.freqs.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidModel("table frequencies must increase strictly".into()));
                }
                if t.levels.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                    return Err(Error::InvalidModel("table levels must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Number of fit parameters including the off-resonance rate.
    pub fn n_params(&self) -> usize {
        match self {
            Lineshape::DoubleLorentzian { .. } => 7,
            Lineshape::SingleLorentzian { .. } => 4,
            Lineshape::Table(_) => 2,
        }
    }

    pub fn level(&self, f: f64) -> f64 {
        match self {
            Lineshape::DoubleLorentzian { dips } => 1.0 - dips[0].depth(f) - dips[1].depth(f),
            Lineshape::SingleLorentzian { dip } => 1.0 - dip.depth(f),
            Lineshape::Table(t) => {
                let n = t.freqs.len();
                if f < t.freqs[0] || f > t.freqs[n - 1] {
                    1.0
                } else {
                    crate::stats::interp_linear(&t.freqs, &t.levels, f)
                }
            }
        }
    }

    /// `dL/df`; the segment slope for tables (0 outside).
    pub fn slope(&self, f: f64) -> f64 {
        match self {
            Lineshape::DoubleLorentzian { dips } => -dips[0].depth_slope(f) - dips[1].depth_slope(f),
            Lineshape::SingleLorentzian { dip } => -dip.depth_slope(f),
            Lineshape::Table(t) => {
                let n = t.freqs.len();
                if f < t.freqs[0] || f > t.freqs[n - 1] {
                    return 0.0;
                }
                let hi = t.freqs.partition_point(|&v| v <= f).clamp(1, n - 1);
                (t.levels[hi] - t.levels[hi - 1]) / (t.freqs[hi] - t.freqs[hi - 1])
            }
        }
    }

    /// Resonance position used as the frequency reference: the mean dip
    /// centre, or the table minimum.
    pub fn center(&self) -> f64 {
        match self {
            Lineshape::DoubleLorentzian { dips } => 0.5 * (dips[0].center + dips[1].center),
            Lineshape::SingleLorentzian { dip } => dip.center,
            Lineshape::Table(t) => {
                let i = (0..t.levels.len())
                    .min_by(|&a, &b| t.levels[a].total_cmp(&t.levels[b]))
                    .unwrap_or(0);
                t.freqs[i]
            }
        }
    }

    /// The same shape moved by `df`.
    pub fn shifted(&self, df: f64) -> Lineshape {
        match self {
            Lineshape::DoubleLorentzian { dips } => Lineshape::DoubleLorentzian {
                dips: dips.map(|d| Dip { center: d.center + df, ..d }),
            },
            Lineshape::SingleLorentzian { dip } => Lineshape::SingleLorentzian {
                dip: Dip { center: dip.center + df, ..*dip },
            },
            Lineshape::Table(t) => Lineshape::Table(InterpolationTable {
                freqs: t.freqs.iter().map(|f| f + df).collect(),
                levels: t.levels.clone(),
            }),
        }
    }
}

/// Uniform sweep of `n` points over `[start, stop]` (Hz).
pub fn uniform_grid(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    ensure_finite("start", start)?;
    ensure_finite("stop", stop)?;
    if n < 2 || !(stop > start) {
        return Err(Error::invalid("grid needs n >= 2 and stop > start"));
    }
    let step = (stop - start) / (n - 1) as f64;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// 200 points from 2850 to 2890 MHz.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(2850.0e6, 2890.0e6, 200).expect("static grid")
}
