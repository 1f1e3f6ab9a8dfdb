//! Seeded random streams.
//!
//! A run owns one root seed. Every consumer forks its own stream from
//! `(root, tag, entity id)`, so the order in which entities draw numbers
//! never changes what any single entity sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags. Adding a tag never perturbs existing streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    World = 1,
    Vehicle = 2,
    Fleet = 3,
    Behavior = 4,
    Subscription = 5,
    Forensics = 6,
    Learner = 7,
    Hotboot = 8,
    Instance = 9,
    Repetition = 10,
    Roles = 11,
    Mobility = 12,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn derive(&self, stream: Stream, id: u64) -> u64 {
        splitmix64(splitmix64(self.root ^ splitmix64(stream as u64)) ^ splitmix64(id.wrapping_add(0x5851_F42D_4C95_7F2D)))
    }

    pub fn rng(&self, stream: Stream, id: u64) -> SimRng {
        SimRng::seed_from_u64(self.derive(stream, id))
    }

    /// A child tree, e.g. one per repetition or hotboot experiment.
    pub fn child(&self, stream: Stream, id: u64) -> SeedTree {
        SeedTree::new(self.derive(stream, id))
    }
}
