//! Splittable seed derivation.
//!
//! Seeds are mixed with the SplitMix64 finalizer (constants `0x9E3779B97F4A7C15`,
//! `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`). Each index is folded in as
//! `h = mix(h ^ mix(index + PATH_SALT))`, and because `mix` is a bijection,
//! paths that differ in their last index never collide.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const PATH_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 output function.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` along an index path. Pure integer arithmetic.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |h, &idx| mix64(h ^ mix64(idx.wrapping_add(PATH_SALT))))
}

/// Seed for running `instance_seed` under evaluation seed `run_seed`.
pub fn episode_seed(instance_seed: u64, run_seed: u64) -> u64 {
    derive_seed(instance_seed, &[run_seed])
}
