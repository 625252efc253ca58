//! Deterministic seed derivation.
//!
//! Every random stream in the toolkit (noise injection, corpus synthesis)
//! derives its RNG seed from an explicit base seed plus a stream index, so
//! that runs are exactly reproducible and streams are decorrelated.

/// Derives a child seed from a base seed and a stream index.
///
/// Uses the splitmix64 finalizer, which maps distinct inputs to
/// well-scrambled outputs.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
