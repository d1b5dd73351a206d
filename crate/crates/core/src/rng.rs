//! Deterministic random streams.
//!
//! Every random object is drawn from a ChaCha8 generator keyed by a 64-bit seed
//! and a stream id, so distinct components of one realization (signs, sample
//! set, hash table) never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::matrix::DenseMatrix;
use crate::scalar::Real;

pub type StreamRng = ChaCha8Rng;

pub mod stream {
    pub const SIGNS: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const HASH: u64 = 3;
    pub const HASH_SIGNS: u64 = 4;
}

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer used to derive child seeds (per trial, per repetition).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_matrix<T: Real>(rows: usize, cols: usize, rng: &mut StreamRng) -> DenseMatrix<T> {
    let data = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z)
        })
        .collect();
    DenseMatrix::from_col_major(rows, cols, data).expect("finite gaussian draws")
}

pub fn uniform_matrix<T: Real>(rows: usize, cols: usize, rng: &mut StreamRng) -> DenseMatrix<T> {
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let data = (0..rows * cols).map(|_| T::lit(unit.sample(rng))).collect();
    DenseMatrix::from_col_major(rows, cols, data).expect("finite uniform draws")
}

pub fn rademacher_matrix<T: Real>(
    rows: usize,
    cols: usize,
    rng: &mut StreamRng,
) -> DenseMatrix<T> {
    let data = random_signs(rows * cols, rng)
        .into_iter()
        .map(|s| if s { T::one() } else { -T::one() })
        .collect();
    DenseMatrix::from_col_major(rows, cols, data).expect("finite signs")
}

/// `true` means +1.
pub fn random_signs(len: usize, rng: &mut StreamRng) -> Vec<bool> {
    use rand::Rng;
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word: u64 = rng.random();
        let take = (len - out.len()).min(64);
        out.extend((0..take).map(|b| (word >> b) & 1 == 0));
    }
    out
}

/// Unit vector drawn uniformly from the sphere in `R^dim`.
pub fn unit_sphere<T: Real>(dim: usize, rng: &mut StreamRng) -> Vec<T> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| T::lit(x / norm)).collect();
        }
    }
}
