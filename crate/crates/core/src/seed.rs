//! Deterministic random streams.
//!
//! Every random decision in the toolkit draws from a ChaCha stream keyed by
//! the run's master seed and a label naming the operation (for example
//! `"twi/select/lda-10/3"`). Streams for different labels are independent, so
//! adding a new random step never perturbs existing artifacts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Master seed plus label-based stream derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream for one named operation.
    pub fn rng(&self, label: &str) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = splitmix64(self.master ^ fnv1a(label.as_bytes()));
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// Child seed stream, used when one operation fans out into sub-operations.
    pub fn child(&self, label: &str) -> SeedStream {
        SeedStream {
            master: splitmix64(self.master ^ fnv1a(label.as_bytes()).rotate_left(17)),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
