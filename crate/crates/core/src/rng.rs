//! Counter-based splittable random streams.
//!
//! Every consumer derives a `ChaCha8` stream from `(seed, tags...)` where the
//! tags identify the module and the trial/block index. Streams depend only on
//! those values, never on scheduling, so Monte-Carlo loops give identical
//! results for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream tags, one per consumer family.
pub mod tag {
    pub const DATASET: u64 = 0x01;
    pub const INIT: u64 = 0x02;
    pub const MC: u64 = 0x03;
    pub const TRIAL: u64 = 0x04;
    pub const PERTURB: u64 = 0x05;
}

/// SplitMix64 finalizer; full-period bijection on u64.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a deterministic ChaCha8 stream from a seed and a tag path.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = mix64(seed);
    for &t in tags {
        state = mix64(state ^ mix64(t));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&mix64(state ^ (i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// One standard normal draw.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// A vector of i.i.d. standard normals.
pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| standard_normal(rng)).collect()
}

/// Uniform sign in {-1.0, +1.0}.
pub fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rand::Rng::gen::<bool>(rng) {
        1.0
    } else {
        -1.0
    }
}
