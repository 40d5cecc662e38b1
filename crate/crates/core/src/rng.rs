//! Deterministic seed derivation.
//!
//! Every run owns a single master seed. All random streams are derived from
//! it by mixing a domain label and an index, in a fixed order:
//!
//! 1. environment streams (`env.train`, `env.record`, `env.eval`) — traffic
//!    placement and ghost moves, one stream per episode;
//! 2. exploration stream (`explore`) — epsilon-greedy draws, one per episode;
//! 3. sampling stream (`sample`) — frequency-sampling draws, one per replicate.
//!
//! Derivation is pure integer mixing, so runs are reproducible across
//! platforms and independent of load order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche behavior for seed mixing.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Derives a child seed from a master seed, a domain label, and an index.
pub fn derive_seed(master: u64, domain: &str, index: u64) -> u64 {
    mix64(mix64(master ^ fnv1a(domain.as_bytes())) ^ index)
}

/// Seeded generator for a derived stream.
pub fn stream_rng(master: u64, domain: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, domain, index))
}
