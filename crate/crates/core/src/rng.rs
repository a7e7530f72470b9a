//! Counter-based random streams.
//!
//! A stream is a value keyed by `(seed, epoch, batch, sample)` plus a draw
//! offset. The key selects a ChaCha8 key; the draw offset positions the
//! block counter. Any two tasks holding the same stream produce the same
//! draws regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Sample index reserved for draws that belong to the whole batch
/// (apply gate, pairing permutations).
pub const BATCH_LEVEL: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngPath {
    pub epoch: u64,
    pub batch: u64,
    pub sample: u64,
    /// Offset in 64-bit draws from the start of the keyed stream.
    pub draw: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub path: RngPath,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: RngPath::default(),
        }
    }

    pub fn with_epoch(self, epoch: u64) -> Self {
        Self {
            path: RngPath {
                epoch,
                ..self.path
            },
            ..self
        }
    }

    pub fn with_batch(self, batch: u64) -> Self {
        Self {
            path: RngPath {
                batch,
                ..self.path
            },
            ..self
        }
    }

    pub fn with_sample(self, sample: u64) -> Self {
        Self {
            path: RngPath {
                sample,
                ..self.path
            },
            ..self
        }
    }

    pub fn with_draw(self, draw: u64) -> Self {
        Self {
            path: RngPath { draw, ..self.path },
            ..self
        }
    }

    /// The stream for whole-batch decisions at this epoch and batch.
    pub fn batch_level(self) -> Self {
        self.with_sample(BATCH_LEVEL).with_draw(0)
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.seed;
        let mut key = [0u8; 32];
        let words = [self.path.epoch, self.path.batch, self.path.sample];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            if let Some(w) = words.get(i) {
                state ^= splitmix64(&mut w.clone());
            }
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// A generator positioned at this stream's draw offset.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_word_pos(u128::from(self.path.draw) * 2);
        rng
    }
}
