use rayon::prelude::*;

use super::{fit_shift, shift_to_temperature, synthesize_bin, KappaCalibration, Lineshape, OdmrScan, ScanTiming, ShiftFit, ShiftFitOptions};
use crate::error::{Error, Result};
use crate::rng::substream;

/// One fit bin per element of `shifts` (Hz), each the sum of
/// `timing.scans_per_bin()` sweeps, with photons drawn from per-bin
/// substreams so the result does not depend on thread count.
pub fn synthesize_series(
    shape: &Lineshape,
    lambda0: f64,
    freqs: &[f64],
    timing: &ScanTiming,
    shifts: &[f64],
    seed: u64,
) -> Result<Vec<OdmrScan>> {
    timing.validate()?;
    let n = timing.scans_per_bin();
    shifts
        .par_iter()
        .enumerate()
        .map(|(i, &df)| {
            let mut rng = substream(seed, "odmr-photons", i as u64);
            synthesize_bin(shape, lambda0, df, freqs, n, &mut rng)
        })
        .collect()
}

/// Fitted shifts of consecutive bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermometrySeries {
    /// Bin midpoints (s).
    pub times: Vec<f64>,
    pub fits: Vec<ShiftFit>,
}

impl ThermometrySeries {
    pub fn converged_count(&self) -> usize {
        self.fits.iter().filter(|f| f.converged).count()
    }

    /// `(t, ΔT, σ)` for converged bins.
    pub fn temperatures(&self, cal: &KappaCalibration) -> Result<Vec<(f64, f64, f64)>> {
        self.times
            .iter()
            .zip(&self.fits)
            .filter(|(_, f)| f.converged)
            .map(|(&t, f)| {
                let (dt, s) = shift_to_temperature(f.df - cal.f0, f.sigma_df, cal)?;
                Ok((t, dt, s))
            })
            .collect()
    }
}

/// Fits every bin against `template`; fits that fail outright are kept as
/// non-converged entries.
pub fn fit_bins(bins: &[OdmrScan], template: &Lineshape, bin_s: f64, opts: &ShiftFitOptions) -> Result<ThermometrySeries> {
    if bins.is_empty() {
        return Err(Error::NotEnoughData("no bins to fit".into()));
    }
    template.validate()?;
    let fits = bins
        .par_iter()
        .map(|b| {
            fit_shift(b, template, opts).unwrap_or(ShiftFit {
                lambda0: f64::NAN,
                df: f64::NAN,
                sigma_df: f64::NAN,
                converged: false,
                cost: f64::NAN,
            })
        })
        .collect();
    Ok(ThermometrySeries {
        times: (0..bins.len()).map(|i| (i as f64 + 0.5) * bin_s).collect(),
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odmr::default_grid;
    use crate::stats::{mean, std_dev};

    #[test]
    fn series_is_reproducible_and_unbiased() {
        let shape = Lineshape::default_double();
        let t = ScanTiming::default();
        let g = default_grid();
        let bins = synthesize_series(&shape, 10.0, &g, &t, &vec![0.0; 100], 3).unwrap();
        let again = synthesize_series(&shape, 10.0, &g, &t, &vec![0.0; 100], 3).unwrap();
        assert_eq!(bins, again);
        let s = fit_bins(&bins, &shape, t.bin, &ShiftFitOptions::default()).unwrap();
        assert_eq!(s.converged_count(), 100);
        let dfs: Vec<f64> = s.fits.iter().map(|f| f.df).collect();
        let sd = std_dev(&dfs);
        assert!(mean(&dfs).abs() < 3.0 * sd / 10.0);
    }
}
