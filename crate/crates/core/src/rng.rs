//! Seeded random streams.
//!
//! Every run owns one root seed which is split into named, independent
//! streams (environment noise, oracle rollouts, ...). Adding a new stream
//! never perturbs the draws of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub const ENV_STREAM: &str = "env";
pub const ORACLE_STREAM: &str = "oracle";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the seed of stream `name` (with an extra index, e.g. a replication
/// number) from a root seed.
pub fn derive_seed(root: u64, name: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a(name)) ^ splitmix64(index.wrapping_add(0x5851_F42D)))
}

pub fn stream(root: u64, name: &str) -> Stream {
    Stream::seed_from_u64(derive_seed(root, name, 0))
}

pub fn indexed_stream(root: u64, name: &str, index: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(root, name, index))
}
