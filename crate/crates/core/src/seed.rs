//! Reproducible random substreams.
//!
//! A master seed and a purpose tag define a stream key; replication `i` of that
//! stream gets a ChaCha generator keyed by the stream and positioned on stream
//! number `i`. Replications can therefore be evaluated in any order, on any
//! number of workers, and still see the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Generator for a plain user seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    key: u64,
}

impl SeedStream {
    pub fn new(master_seed: u64, tag: &str) -> Self {
        Self {
            key: splitmix64(master_seed ^ splitmix64(fnv1a(tag))),
        }
    }

    /// A child stream, e.g. one per study cell.
    pub fn child(&self, tag: &str) -> Self {
        Self {
            key: splitmix64(self.key ^ fnv1a(tag)),
        }
    }

    /// Generator for replication `index`.
    pub fn rng(&self, index: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }

    /// Plain 64-bit seed for replication `index`, for APIs taking a seed.
    pub fn seed(&self, index: u64) -> u64 {
        splitmix64(self.key ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
    }
}
