//! Small deterministic hashing helpers shared across modules.
//!
//! The standard library's `DefaultHasher` is not guaranteed to be stable
//! across compiler releases, so anything that feeds a persisted artifact or a
//! seeded pseudo-random draw goes through the fixed-constant functions here.

/// FNV-1a over a byte slice with the standard 64-bit offset basis and prime.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer. Bijective on `u64`, good avalanche, and cheap enough
/// to use as a counter-based generator: hash the counter, use the output.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[-1, 1)` keyed by `(seed, a, b)`. Used for lazily
/// materialized random projection entries so no projection matrix is stored.
pub(crate) fn keyed_uniform(seed: u64, a: u64, b: u64) -> f64 {
    let mixed = splitmix64(seed ^ splitmix64(a ^ splitmix64(b)));
    let unit = (mixed >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * unit - 1.0
}

/// Stable hex fingerprint of a byte string, suitable for configuration
/// digests in manifests and plans.
pub fn stable_digest(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

/// Cosine similarity of two dense vectors of equal length; 0 when either
/// has zero norm.
pub(crate) fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}
