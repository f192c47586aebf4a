//! Seeded, addressable random streams.
//!
//! Every random draw in the crate comes from a [`SeedStream`]. A stream is a
//! 64-bit key; child streams are derived by mixing the key with a label, so
//! a given (iteration, purpose, dimension) path always yields the same
//! generator regardless of what else was drawn before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handed out by [`SeedStream::rng`].
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of labels into `seed`. Stable across platforms and releases.
pub fn mix(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l.wrapping_add(GOLDEN))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { key: seed }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent substream addressed by `label`.
    pub fn child(&self, label: u64) -> Self {
        Self { key: mix(self.key, &[label]) }
    }

    pub fn path(&self, labels: &[u64]) -> Self {
        Self { key: mix(self.key, labels) }
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
