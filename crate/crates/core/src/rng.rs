//! Seeded random streams.
//!
//! Every simulation takes an explicit generator. Parallel trials use
//! independent streams seeded with `master_seed + trial_index`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TomoRng = ChaCha8Rng;

/// Recorded in experiment metadata so that published tables can be regenerated.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

pub fn seeded(seed: u64) -> TomoRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    master_seed.wrapping_add(trial_index)
}

pub fn trial_rng(master_seed: u64, trial_index: u64) -> TomoRng {
    seeded(trial_seed(master_seed, trial_index))
}
