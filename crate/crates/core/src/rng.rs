//! Counter-based random streams.
//!
//! Every particle draws from its own ChaCha stream keyed by `(seed, step, index)`,
//! so results do not depend on how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SmcRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a seed with a label into a new independent seed.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix(splitmix(seed) ^ label.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn seeded(seed: u64) -> SmcRng {
    SmcRng::seed_from_u64(seed)
}

/// Source of per-particle streams for one algorithm step.
#[derive(Debug, Clone, Copy)]
pub struct StreamSet {
    key: u64,
}

impl StreamSet {
    /// Draw the step key from a driver rng.
    pub fn from_rng<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StreamSet { key: rng.gen() }
    }

    pub fn from_key(key: u64) -> Self {
        StreamSet { key }
    }

    pub fn stream(&self, index: usize) -> SmcRng {
        let mut rng = SmcRng::seed_from_u64(self.key);
        rng.set_stream(index as u64 + 1);
        rng
    }

    /// A stream reserved for population-level draws (resampling, etc.).
    pub fn shared(&self) -> SmcRng {
        let mut rng = SmcRng::seed_from_u64(self.key);
        rng.set_stream(0);
        rng
    }
}
