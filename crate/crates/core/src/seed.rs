//! Seed derivation for repeatable parallel work.

/// Derives an independent child seed from `master` and a stream index.
///
/// SplitMix64 finalizer over the pair, so children of the same master never
/// depend on how work is scheduled.
pub fn derive(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        let a = derive(42, 0);
        assert_eq!(a, derive(42, 0));
        assert_ne!(a, derive(42, 1));
        assert_ne!(a, derive(43, 0));
    }
}
