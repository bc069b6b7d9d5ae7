//! Seed derivation. Every random draw in the crate comes from a ChaCha stream
//! keyed by a root seed, a stream name and an index, so components can be
//! replayed independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the stream name.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn derive_seed(root: u64, stream: &str, index: u64) -> u64 {
    splitmix(splitmix(root ^ name_hash(stream)) ^ splitmix(index.wrapping_add(0x5bd1_e995)))
}

pub fn stream(root: u64, name: &str, index: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, name, index))
}

/// Stable 64-bit key for a string, used to derive per-strategy streams.
pub fn key_of(s: &str) -> u64 {
    splitmix(name_hash(s))
}
