//! Seeded random number helpers.
//!
//! Every randomized routine in the crate (verification trials, weight
//! initialization, synthetic data) goes through these so that a fixed
//! seed reproduces the exact same stream on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::mat::{DenseMat, DenseVec};

/// Stream cipher generator with a platform-independent stream.
pub type SeededRng = ChaCha12Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer. Used to fold several keys into one seed
/// without correlating nearby inputs.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw from `[-scale, scale]`.
pub fn uniform(rng: &mut SeededRng, scale: f64) -> f64 {
    rng.random_range(-scale..=scale)
}

pub fn random_vec(rng: &mut SeededRng, len: usize, scale: f64) -> DenseVec {
    let data = (0..len).map(|_| uniform(rng, scale)).collect();
    DenseVec::from_raw(data)
}

pub fn random_mat(rng: &mut SeededRng, rows: usize, cols: usize, scale: f64) -> DenseMat {
    let data = (0..rows * cols).map(|_| uniform(rng, scale)).collect();
    DenseMat::from_raw(rows, cols, data)
}
