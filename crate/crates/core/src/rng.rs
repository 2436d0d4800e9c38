//! Counter-based random streams.
//!
//! Every random decision in the library draws from a Xoshiro256++ stream
//! whose state is derived from the address `(seed, domain, a, b)` rather
//! than from the position of a shared generator. Two calls with the same address observe the same
//! numbers no matter how many other draws happened in between, so sampling
//! can be evaluated per node in any order or in parallel.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator type behind every stream.
pub type StreamRng = Xoshiro256PlusPlus;

/// Separates independent uses of the same user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Batch = 1,
    Neighbors = 2,
    Init = 3,
    Split = 4,
    Generate = 5,
    Features = 6,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn address(seed: u64, domain: Domain, a: u64, b: u64) -> u64 {
    let mut k = mix64(seed);
    k = mix64(k ^ domain as u64);
    k = mix64(k ^ a);
    mix64(k ^ b.rotate_left(17))
}

/// Returns the generator addressed by `(seed, domain, a, b)`.
pub fn stream(seed: u64, domain: Domain, a: u64, b: u64) -> StreamRng {
    StreamRng::seed_from_u64(address(seed, domain, a, b))
}
