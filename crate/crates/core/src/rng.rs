//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream. The 256-bit key is
//! the SplitMix64 expansion of `seed ^ domain`, and the 64-bit ChaCha stream
//! number is the run (or boundary point, or sample block) index. A stream
//! therefore depends only on `(seed, domain, index)`, never on which worker
//! thread consumes it, so serial and parallel executions agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Separates the random streams of different experiment kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    StoppedWalk = 0x5354_4f50,
    Capacity = 0x4341_5041,
    Sigma1 = 0x5349_474d,
    Pattern = 0x5041_5454,
    Mixing = 0x4d49_5849,
    Lerw = 0x4c45_5257,
    Scratch = 0x5343_5241,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream for item `index` of experiment kind `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut state = seed ^ (domain as u64).rotate_left(32);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
