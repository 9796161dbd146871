//! Deterministic seed splitting.
//!
//! A run is identified by one 64-bit seed. Each consumer gets its own ChaCha
//! stream derived from that seed, so swapping the learning algorithm never
//! perturbs the context or noise draws of a paired run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The independent random streams carved out of a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Contexts = 0,
    Noise = 1,
    Algorithm = 2,
    Adversary = 3,
    Instance = 4,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Per-run generators for the three streams a simulation consumes.
#[derive(Debug, Clone)]
pub struct RunRngs {
    pub contexts: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub algorithm: ChaCha8Rng,
}

impl RunRngs {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            contexts: stream(seed, Stream::Contexts),
            noise: stream(seed, Stream::Noise),
            algorithm: stream(seed, Stream::Algorithm),
        }
    }
}
