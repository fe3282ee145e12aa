//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by an
//! explicit seed and a stream id, so runs are reproducible across platforms
//! and independent consumers never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used by the pipeline. Distinct ids give independent sequences
/// from the same seed.
pub mod stream {
    pub const CHANNEL: u64 = 1;
    pub const DEMANDS: u64 = 2;
    pub const POLICY: u64 = 3;
    pub const REPLAY: u64 = 4;
    pub const INIT: u64 = 5;
    pub const BASELINE: u64 = 6;
    pub const SPLIT: u64 = 7;
    pub const BENCH: u64 = 8;
    pub const SUBSAMPLE: u64 = 9;
    /// Dataset rows use `DATASET_ROW + row_index`.
    pub const DATASET_ROW: u64 = 1 << 32;
}

pub fn seeded(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
