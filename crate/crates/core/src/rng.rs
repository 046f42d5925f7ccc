//! Seed derivation.
//!
//! A single run seed feeds every random component. Each component draws from
//! its own ChaCha stream, so adding or removing draws in one component never
//! shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Folds = 1,
    AlsInit = 2,
    BprInit = 3,
    BprSampling = 4,
    Synthetic = 5,
}

pub fn derived(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
