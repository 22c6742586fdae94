//! Simulation and analysis toolkit for dual-mode nanodiamond quantum sensing.
//!
//! The crate is organised around the [`Trajectory`] exchange type:
//!
//! * [`media`] generates ground-truth particle motion (Brownian, fractional
//!   Brownian, directed runs) and temperature-dependent material models.
//! * [`tracker`] emulates the double-plane orbital tracking loop photon by
//!   photon and turns a true trajectory into a tracked estimate.
//! * [`odmr`] synthesises ODMR spectra, fits frequency shifts, converts them
//!   to temperature and bounds the attainable precision.
//! * [`rheology`] computes MSDs, diffusion/exponent fits, complex moduli,
//!   Welch PSDs and external-force spectra.
//! * [`segmentation`] detects directed-motion segments with the
//!   directionality-ratio test.
//! * [`chip`] models the sensing chip: RTD conversion, heater/microwave
//!   timelines and setpoint schedules.
//! * [`io`] reads and writes the CSV exchange formats.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chip;
pub mod error;
pub mod io;
pub mod media;
pub mod odmr;
pub mod rheology;
pub mod rng;
pub mod segmentation;
pub mod stats;
pub mod tracker;
pub mod units;

pub use error::{Error, Result};
pub use media::Trajectory;
