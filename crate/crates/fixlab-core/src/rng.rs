//! Deterministic, parallelism-independent random streams.
//!
//! Every replicate of every experiment draws from its own stream keyed by
//! `(global seed, experiment tag, replicate index)`. Streams are derived by
//! mixing the key into a 256-bit ChaCha seed, so results are bit-identical
//! regardless of how replicates are distributed over workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 mixing step (Vigna). Full-period, passes into ChaCha seeding.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a hash of an experiment name, used as the stream's experiment tag.
pub fn experiment_tag(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Address of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub experiment: u64,
    pub replicate: u64,
}

impl StreamKey {
    pub fn new(seed: u64, experiment: u64, replicate: u64) -> Self {
        StreamKey { seed, experiment, replicate }
    }

    pub fn for_experiment(seed: u64, name: &str, replicate: u64) -> Self {
        StreamKey::new(seed, experiment_tag(name), replicate)
    }

    /// Derive the stream. Cheap enough to call once per replicate.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut state = self.seed ^ 0x6a09_e667_f3bc_c908;
        let a = splitmix64(&mut state);
        state ^= self.experiment;
        let b = splitmix64(&mut state);
        state ^= self.replicate;
        let c = splitmix64(&mut state);
        let d = splitmix64(&mut state);
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&a.to_le_bytes());
        key[8..16].copy_from_slice(&b.to_le_bytes());
        key[16..24].copy_from_slice(&c.to_le_bytes());
        key[24..32].copy_from_slice(&d.to_le_bytes());
        ChaCha12Rng::from_seed(key)
    }
}
