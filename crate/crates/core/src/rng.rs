//! Reproducible random streams.
//!
//! Every random operation takes a [`SeededRng`] naming a `(seed, stream_id)`
//! pair. The pair is expanded into a ChaCha8 generator whose 64-bit stream
//! selector is the stream id, so draws keyed by index never share state and
//! results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Materialize the generator for this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A stream family for a derived task (e.g. one replication of a benchmark).
    /// The derived seed is a hash of `(seed, task)`; stream ids inside the family
    /// start at zero again.
    pub fn derive(seed: u64, task: u64) -> u64 {
        splitmix64(seed ^ splitmix64(task.wrapping_add(0x9E37_79B9_7F4A_7C15)))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
