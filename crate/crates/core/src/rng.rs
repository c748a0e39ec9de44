//! The repo-wide randomness discipline.
//!
//! Every random stream in this crate is a [`ChaCha8Rng`] seeded from a single
//! `u64`. Multi-trial experiments derive one independent stream per trial by
//! mixing `(base_seed, trial_index)` through a SplitMix64 finalizer, so adding
//! or removing trials never perturbs the streams of the trials that remain,
//! and parallel execution sees exactly the streams serial execution would.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The one generator family used everywhere in this crate.
pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix on 64 bits.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Opens the random stream identified by `seed`.
pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

/// Derives the seed for one trial of a multi-trial experiment.
///
/// Stateless in `trial`: the seed depends only on `(base_seed, trial)`, never
/// on how many other trials run or in what order.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    splitmix64(base_seed ^ trial.wrapping_add(1).wrapping_mul(GOLDEN))
}

/// Opens the random stream for one trial.
pub fn trial_stream(base_seed: u64, trial: u64) -> Stream {
    stream(trial_seed(base_seed, trial))
}
