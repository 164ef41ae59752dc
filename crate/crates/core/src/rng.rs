//! Seed derivation for independent random streams.
//!
//! Every consumer of randomness (world generation, horizon draws, action
//! sampling, weight initialization, evaluation) gets its own ChaCha stream
//! derived from the run seed, so changing how one consumer draws numbers
//! never perturbs another. This is what lets the Cauchy and Gaussian runs of
//! one seed see identical worlds and identical horizons.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    World = 1,
    Horizon = 2,
    Policy = 3,
    Init = 4,
    EvalWorld = 5,
    EvalPolicy = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `(seed, stream, index)` into a single 64-bit seed.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream as u64) ^ index)
}

pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stream, index))
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
