//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so any
//! parallel chunking of work items produces bit-identical results to a
//! sequential run. Streams are used for independent work units (scenario
//! index, epoch index, ...) and the counter enumerates draws within a
//! stream.
//!
//! The generator is a SplitMix64-style avalanche over the combined key,
//! which is statistically solid for Monte-Carlo use at this scale.

use crate::special::std_normal_inv;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit output for key `(seed, stream, counter)`.
#[inline]
pub fn bits(seed: u64, stream: u64, counter: u64) -> u64 {
    // Chain the three key words through the mixer so that nearby keys
    // land far apart in state space.
    splitmix64(splitmix64(splitmix64(seed) ^ stream).wrapping_add(counter))
}

/// Uniform draw strictly inside (0, 1).
#[inline]
pub fn uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    // 53 mantissa bits, offset by half an ulp so 0 and 1 are unreachable.
    ((bits(seed, stream, counter) >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw via the inverse CDF of a uniform draw.
#[inline]
pub fn standard_normal(seed: u64, stream: u64, counter: u64) -> f64 {
    // uniform() is strictly inside (0,1); the inverse cannot fail.
    std_normal_inv(uniform(seed, stream, counter)).expect("uniform draw in (0,1)")
}

/// Derive a stage seed from the root seed and a stage tag.
///
/// All pipeline randomness flows from one root seed; each stage hashes its
/// tag into the root so stages can rerun independently yet reproducibly.
pub fn derive_seed(root: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325; // FNV-1a offset basis
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(root ^ h)
}

/// Deterministic Fisher-Yates shuffle keyed by `(seed, stream)`.
pub fn shuffle<T>(items: &mut [T], seed: u64, stream: u64) {
    let n = items.len();
    for i in (1..n).rev() {
        let j = (bits(seed, stream, i as u64) % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}
