//! Physical constants and unit conversions.
//!
//! Lengths are carried in nm, times in s and temperatures in °C throughout
//! the crate; kelvin only appears where thermal energy is needed.

/// Boltzmann constant (J/K), exact SI value.
pub const BOLTZMANN: f64 = 1.380_649e-23;

pub const ZERO_CELSIUS_K: f64 = 273.15;

pub const NM: f64 = 1e-9;
pub const NM2: f64 = 1e-18;

#[inline]
pub fn celsius_to_kelvin(t_c: f64) -> f64 {
    t_c + ZERO_CELSIUS_K
}

#[inline]
pub fn kelvin_to_celsius(t_k: f64) -> f64 {
    t_k - ZERO_CELSIUS_K
}

/// Thermal energy k_B·T in joules for a temperature in kelvin.
#[inline]
pub fn thermal_energy(t_k: f64) -> f64 {
    BOLTZMANN * t_k
}
