//! Reproducible per-trajectory random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by the master seed and
//! selected by the stream index, so stream `k` produces the same numbers no
//! matter which worker draws it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(master_seed: u64, stream_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_index);
    rng
}
