//! Seed derivation for reproducible substreams.
//!
//! Every random decision in the crate draws from a ChaCha stream whose seed
//! is derived from a master seed plus the coordinates of the decision
//! (intersection, decision time, sample index, ...). Runs with the same
//! master seed therefore reproduce bit-identical results regardless of how
//! work is ordered, and consuming more draws in one substream never shifts
//! another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-period mixing of a 64-bit state.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed`, one mixing round per part.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0x51_7C_C1_B7_27_22_0A_95);
    for &p in parts {
        h = splitmix64(h ^ p.wrapping_mul(0x2545_F491_4F6C_DD1D));
    }
    h
}

/// A ChaCha stream keyed by `seed` and the substream coordinates `parts`.
pub fn substream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, parts))
}
