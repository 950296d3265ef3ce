//! Counter-based seed expansion. One 64-bit run seed yields an independent
//! ChaCha8 generator for every (stream, index) pair, so e.g. shift k of a run
//! can be regenerated without replaying shifts 0..k.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream; the discriminant is mixed into the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Random shift vectors of a lattice rule; index = shift number.
    Shift = 1,
    /// Monte Carlo batches; index = batch number.
    MonteCarlo = 2,
    /// Fresh samples for goodness-of-fit tests; index = repetition.
    Validation = 3,
    /// Anything used only by tests and diagnostics.
    Auxiliary = 4,
}

/// SplitMix64 finalizer (Steele, Lea and Flood).
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSplitter {
    seed: u64,
}

impl SeedSplitter {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// 256-bit key = four SplitMix64 outputs of (seed, stream, index, lane).
    pub fn key(&self, stream: Stream, index: u64) -> [u8; 32] {
        let base =
            splitmix64(splitmix64(self.seed) ^ splitmix64(stream as u64).rotate_left(17) ^ index);
        let mut key = [0u8; 32];
        for (lane, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(base.wrapping_add(lane as u64)).to_le_bytes());
        }
        key
    }

    pub fn rng(&self, stream: Stream, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key(stream, index))
    }
}
