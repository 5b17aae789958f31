//! Seeded pseudorandom streams. All randomness in the crate flows from here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream family for anchor draws when estimating witness rates.
pub const WITNESS_RATE: u64 = 1;
/// Stream family for learner sample draws.
pub const LEARNER_TRIALS: u64 = 2;
/// Stream family for choosing concepts and random boxes.
pub const SELECTION: u64 = 3;

/// An independent stream for `(purpose, major, minor)` under one seed.
pub fn substream(seed: u64, purpose: u64, major: u64, minor: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0xD1B5_4A32_D192_ED03));
    rng.set_stream(major.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ minor);
    rng
}
