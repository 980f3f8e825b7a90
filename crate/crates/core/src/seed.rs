//! Stable seed derivation for reproducible sub-streams.
//!
//! Campaigns derive one RNG seed per document, per meta description, and per
//! stochastic oracle draw from the plan seed plus a label path. The hash is
//! FNV-1a, fixed here so derived seeds never change across platforms or
//! standard-library versions.

/// Derive a child seed from `base` and a label path.
pub fn derive(base: u64, parts: &[&str]) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut hash = OFFSET;
    for byte in base.to_le_bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(PRIME);
    }
    for part in parts {
        for byte in part.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(PRIME);
        }
        // separator so ("ab","c") and ("a","bc") hash differently
        hash ^= 0xff;
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}
