//! Counter-based random streams.
//!
//! Every (trial, slot) pair owns its own ChaCha stream derived from the master
//! seed, so the draws of a work item never depend on which worker ran it or
//! in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream index reserved for per-scenario draws (signal phases, random angles).
pub const SCENARIO_STREAM: u64 = u64::MAX;

/// Words reserved per slot inside one trial stream.
const WORDS_PER_SLOT: u128 = 1 << 36;

/// Generator for slot `slot` of trial `trial`.
pub fn substream(seed: u64, trial: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.set_word_pos(slot as u128 * WORDS_PER_SLOT);
    rng
}

/// Generator for draws that are fixed once per scenario.
pub fn scenario_stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    substream(seed, SCENARIO_STREAM, purpose)
}
