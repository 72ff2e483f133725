//! Deterministic random streams.
//!
//! Every random quantity in the toolkit is drawn from a ChaCha8 generator
//! keyed by a single 64-bit seed. Independent consumers (Monte Carlo
//! replicas, the channel-measurement pass) each get their own stream of the
//! same key, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for measuring the operational noise rate of a channel.
pub const MEASUREMENT_STREAM: u64 = u64::MAX;

/// Stream reserved for the QBER holdout selection.
pub const HOLDOUT_STREAM: u64 = u64::MAX - 1;

/// Generator for stream `stream` of key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
