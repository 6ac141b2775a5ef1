//! Counter-based random streams.
//!
//! Every uniform is addressed by `(seed, stream_id, word offset)` on a
//! ChaCha8 keystream, so any worker can reproduce any draw without replaying
//! the draws before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Number of 32-bit keystream words reserved per point: two f64 draws.
const WORDS_PER_POINT: u128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A sequential generator at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// The `(u, v)` pair for point `index`, both in `[0, 1)`.
    pub fn uniform_pair(&self, index: u64) -> (f64, f64) {
        let mut rng = self.rng();
        rng.set_word_pos(index as u128 * WORDS_PER_POINT);
        (rng.random::<f64>(), rng.random::<f64>())
    }

    /// A child stream keyed by `tags`. Distinct tag paths give unrelated
    /// stream ids with overwhelming probability.
    pub fn derive(&self, tags: &[u64]) -> RngSpec {
        let mut h = splitmix64(self.stream_id ^ 0x6a09_e667_f3bc_c908);
        for &t in tags {
            h = splitmix64(h ^ splitmix64(t.wrapping_add(0x9e37_79b9_7f4a_7c15)));
        }
        RngSpec::new(self.seed, h)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
