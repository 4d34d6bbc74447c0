//! Deterministic per-chain random streams.
//!
//! Every chain owns a ChaCha8 stream keyed by (master seed, chain index), so
//! trajectories do not depend on how chains are scheduled across workers and
//! any chain can be replayed in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 step; used only to whiten seed material.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the random stream for one chain of an ensemble.
///
/// Distinct (seed, chain) pairs get distinct 256-bit ChaCha keys, so streams
/// are independent for all practical purposes and stable across platforms.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut state = seed ^ chain.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for word in key.chunks_exact_mut(8) {
        word.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
