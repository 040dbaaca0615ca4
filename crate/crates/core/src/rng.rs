//! Seeded random source.
//!
//! Every stochastic step in the crate (weight init, dropout masks, batch
//! shuffling, background sampling, synthetic data) draws from
//! [`ChaCha8Rng`], a counter-based generator whose output stream is fully
//! specified by its 256-bit key and 64-bit stream id. `seed_from_u64`
//! expands a `u64` seed into the key with PCG32, so identical seeds give
//! identical streams on every platform.
//!
//! Independent sub-streams (per epoch, per batch item, ...) are selected
//! with [`ChaCha8Rng::set_stream`] rather than by reseeding, so the parent
//! seed still determines everything.

pub use rand::Rng;
pub use rand_chacha::ChaCha8Rng as SeededRng;

use rand::SeedableRng;

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Generator for a named sub-stream of `seed`.
pub fn substream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used by the crate, kept distinct so that changing one
/// consumer never perturbs another.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const BACKGROUND: u64 = 4;
    pub const SVR_SUBSAMPLE: u64 = 5;
    pub const SHAP_SAMPLES: u64 = 6;
}
