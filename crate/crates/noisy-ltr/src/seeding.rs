//! Deterministic, platform-independent random streams.
//!
//! Every stochastic component of the crate draws from a [`ChaCha8Rng`] whose
//! seed is derived from a base seed plus a list of integer tags (a domain
//! constant, then indices such as query or scorer numbers). Deriving one
//! stream per unit of work makes results independent of iteration order and
//! thread count, and identical across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Domain tags. Each stochastic subsystem gets its own constant so that
// streams never collide even when the remaining tags look alike.
pub(crate) const DOMAIN_NOISE: u64 = 0x01;
pub(crate) const DOMAIN_SYNTH_THETA: u64 = 0x02;
pub(crate) const DOMAIN_SYNTH_DOCS: u64 = 0x03;
pub(crate) const DOMAIN_SPLIT: u64 = 0x04;
pub(crate) const DOMAIN_SCORER_NOISE: u64 = 0x05;
pub(crate) const DOMAIN_RANDOM_SCORER: u64 = 0x06;
pub(crate) const DOMAIN_DRAW: u64 = 0x07;
pub(crate) const DOMAIN_BATCH_SHUFFLE: u64 = 0x08;
pub(crate) const DOMAIN_SWEEP: u64 = 0x09;

/// SplitMix64 finalizer; the standard 64-bit avalanche mixer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds `tags` into `base` one mix round per tag.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(base);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t));
    }
    s
}

/// A fresh ChaCha8 stream for the given (base, tags) identity.
pub fn derive_rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

/// FNV-1a over the UTF-8 bytes; used to tag streams by query id. Stable
/// across platforms and Rust versions, unlike `DefaultHasher`.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
