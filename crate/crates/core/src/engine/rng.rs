//! Deterministic stream derivation.
//!
//! Every (realization, purpose) pair gets its own independent generator so
//! nested Monte Carlo layers never share increments. Streams are derived by
//! hashing `(seed, realization, purpose, lane)` through SplitMix64 into a
//! ChaCha key; identical inputs yield bit-identical streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; keeps sub-streams of one realization disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Brownian increments driving the stock / innovations.
    Brownian,
    /// Exponential holding times of the regime chain.
    Chain,
    /// Inner-loop paths of node-level estimators.
    Estimator,
    /// Auxiliary draws (e.g. sampling the unknown drift from the prior).
    Scenario,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Brownian => 0x42524f574e49414e,
            Purpose::Chain => 0x434841494e000000,
            Purpose::Estimator => 0x455354494d415445,
            Purpose::Scenario => 0x5343454e4152494f,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A deterministic stream for one `(seed, realization, purpose, lane)`.
///
/// `lane` distinguishes parallel sub-streams within one purpose (e.g. the
/// path index of an inner estimator).
pub fn stream(seed: u64, realization: u64, purpose: Purpose, lane: u64) -> ChaCha8Rng {
    let mut state = seed
        ^ realization.rotate_left(17)
        ^ purpose.tag().rotate_left(31)
        ^ lane.rotate_left(47);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
