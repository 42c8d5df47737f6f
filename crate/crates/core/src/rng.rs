//! Named, reproducible random substreams.
//!
//! Every simulation draws from a tree of streams rooted at one 64-bit master
//! seed. A child key is derived from its parent key, a label and an index:
//!
//! ```text
//! child = splitmix64(splitmix64(parent + fnv1a64(label)) ^ index)
//! ```
//!
//! and a key is turned into a generator with `ChaCha8Rng::seed_from_u64(key)`.
//! The derivation only depends on the labels and indices, never on how many
//! values other streams consumed, so adding a draw in one place leaves every
//! other stream untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        StreamKey(master_seed)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn child(self, label: &str, index: u64) -> Self {
        let k = splitmix64(self.0.wrapping_add(fnv1a64(label.as_bytes())));
        StreamKey(splitmix64(k ^ index))
    }

    pub fn rng(self) -> SimRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
