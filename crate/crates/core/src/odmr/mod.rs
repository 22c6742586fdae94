//! ODMR thermometry: synthetic spectra, shift fitting, temperature
//! conversion, Cramér–Rao bounds and Allan statistics.

mod allan;
mod crb;
mod fit;
mod kappa;
mod lineshape;
mod lm;
mod pipeline;
mod synth;

pub use allan::{allan_deviation, fit_white_noise, octave_factors, AllanCurve, WhiteNoiseFit};
pub use crb::{crb, crb_temperature_sensitivity, fisher_matrix, CrbBound, CrbParams};
pub use fit::{
    average_consecutive, fit_double_lorentzian, fit_shift, fit_single_lorentzian, AveragedShift,
    LorentzianFit, ShiftFit, ShiftFitOptions,
};
pub use kappa::{
    calibrate_kappa, kappa_shift_posterior, shift_to_temperature, KappaCalibration, KappaLevel,
    ShiftPosterior,
};
pub use lineshape::{default_grid, uniform_grid, Dip, InterpolationTable, Lineshape};
pub use pipeline::{fit_bins, synthesize_series, ThermometrySeries};
pub use synth::{
    build_interpolation, synthesize_bin, synthesize_scan, OdmrScan, ScanTiming, DEFAULT_LAMBDA0,
};
