//! Deterministic per-trial random streams.
//!
//! Every trial owns a set of independent ChaCha streams keyed by
//! `(seed, trial index, purpose)`, so results never depend on the order in
//! which worker threads pick up trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Geometry = 1,
    Channel = 2,
    Timing = 3,
    Content = 4,
    UlNoise = 5,
    Eigen = 6,
    UeNoiseH0 = 7,
    UeNoiseH1 = 8,
    EveNoiseH0 = 9,
    EveNoiseH1 = 10,
}

/// Returns the stream for `purpose` in trial `trial` of the campaign seeded by `seed`.
pub fn trial_stream(seed: u64, trial: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | purpose as u64);
    rng
}
