//! Small shared helpers.

/// FNV-1a over a byte slice. Used for config and schema fingerprints that
/// must stay stable across builds, which rules out `std::hash`.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
