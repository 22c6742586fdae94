//! Passive microrheology: MSD with stochastic error bars, diffusion and
//! exponent fits, complex modulus, position PSD and external-force spectra.

mod fit;
mod force;
mod modulus;
mod msd;
mod psd;
mod radius;

pub use fit::{anomalous_exponent, fit_diffusion, DiffusionFit, DiffusionFitMode, ExponentFit};
pub use force::{external_force_spectrum, thermal_force_psd, ForceSpectrum};
pub use modulus::{complex_modulus, ComplexModulus};
pub use msd::{
    ensemble_variance, linear_lags, log_lags, msd, AxisSet, MsdCurve, MsdOptions,
    VarianceEstimator, DEFAULT_NOISE_FLOOR_NM2,
};
pub use psd::{psd, Psd, PsdOptions};
pub use radius::{fit_hydrodynamic_radius, RadiusFit, TemperatureDiffusionPoint};
