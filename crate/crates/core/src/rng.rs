//! Counter-keyed random substreams.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key is the tuple
//! `(seed, domain, generation, replica, index)`. Streams for distinct keys are
//! independent, so replicas can be evaluated in any order or thread layout and
//! produce identical draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags that keep unrelated consumers of the same root seed apart.
pub mod domain {
    pub const SIMULATION: u32 = 0;
    pub const MEAN: u32 = 1;
    pub const LIMIT: u32 = 2;
    pub const AUXILIARY: u32 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Substreams {
    seed: u64,
    domain: u32,
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Substreams { seed, domain: domain::SIMULATION }
    }

    pub fn with_domain(self, domain: u32) -> Self {
        Substreams { domain, ..self }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self, replica: u64) -> ReplicaStreams {
        ReplicaStreams { root: *self, replica }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReplicaStreams {
    root: Substreams,
    replica: u64,
}

impl ReplicaStreams {
    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// Stream owned by individual `index` of `generation` in this replica.
    pub fn stream(&self, generation: u32, index: u64) -> StreamRng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.root.seed.to_le_bytes());
        key[8..12].copy_from_slice(&self.root.domain.to_le_bytes());
        key[12..16].copy_from_slice(&generation.to_le_bytes());
        key[16..24].copy_from_slice(&self.replica.to_le_bytes());
        key[24..32].copy_from_slice(&index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}
