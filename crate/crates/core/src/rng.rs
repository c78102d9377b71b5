//! Named deterministic random streams.
//!
//! Every stream is a ChaCha8 generator seeded from `(seed, name)`, so
//! drawing more or fewer values from one stream never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const TERRAIN: &str = "terrain";
pub const PLACEMENT: &str = "placement";
pub const ROSTER: &str = "roster";
pub const CARGO: &str = "cargo";
pub const SPAWNS: &str = "spawns";
pub const MALFUNCTIONS: &str = "malfunctions";

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream `name` derived from the scenario seed.
pub fn stream(seed: u64, name: &str) -> StreamRng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(fnv1a64(name.as_bytes()))))
}
