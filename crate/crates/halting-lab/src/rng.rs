//! Deterministic random streams.
//!
//! A trial's seed is a hash of `(master seed, trial index)`. Each random
//! component of an instance (matrix, signal, noise, mini-batches) reads from
//! its own ChaCha stream of that seed, so every draw is reproducible no
//! matter how trials are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Independent random components of a problem instance or run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    /// Entries of the data matrix `A`.
    Matrix = 1,
    /// Initial point `x₀`.
    Init = 2,
    /// Signal `x̃`.
    Signal = 3,
    /// Label noise `η`.
    Noise = 4,
    /// First-layer weights of the one-hidden-layer model.
    HiddenWeights = 5,
    /// Inputs of the one-hidden-layer model.
    HiddenInputs = 6,
    /// Mini-batch index sampling.
    Batches = 7,
}

/// Seed of trial `trial` under master seed `master` (SplitMix64 finalizer).
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for one component of the instance seeded by `seed`.
pub fn stream(seed: u64, component: Component) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(component as u64);
    rng
}
