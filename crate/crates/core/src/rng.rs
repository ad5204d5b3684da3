//! Keyed random streams.
//!
//! Stream `(purpose, index)` is seeded from `SHA-256(master_seed, purpose, index)`, so
//! every replication owns an independent generator and adding a new purpose never
//! shifts the draws of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

const DOMAIN: &[u8] = b"monostab/stream/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Streams {
    master_seed: u64,
}

/// Identifies one stream; recorded alongside simulated data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub purpose: String,
    pub index: u64,
}

impl Streams {
    pub fn new(master_seed: u64) -> Self {
        Streams { master_seed }
    }

    pub fn seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, purpose: &str, index: u64) -> StreamRng {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.master_seed.to_le_bytes());
        h.update((purpose.len() as u64).to_le_bytes());
        h.update(purpose.as_bytes());
        h.update(index.to_le_bytes());
        let digest: [u8; 32] = h.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }

    pub fn key(&self, purpose: &str, index: u64) -> StreamKey {
        StreamKey { seed: self.master_seed, purpose: purpose.to_owned(), index }
    }
}

impl StreamKey {
    pub fn rng(&self) -> StreamRng {
        Streams::new(self.seed).stream(&self.purpose, self.index)
    }
}
