//! Deterministic random-number streams.
//!
//! Every random draw in the crate comes from a [`SimRng`] derived from a
//! master seed plus a named substream and an index, so that ensemble members
//! generated in parallel are bit-identical to a serial run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for member `index` of substream `name` under `master`.
pub fn derive_seed(master: u64, name: &str, index: u64) -> u64 {
    mix(mix(master ^ name_hash(name)).wrapping_add(mix(index)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn substream(master: u64, name: &str, index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, name, index))
}
