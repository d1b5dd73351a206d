use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CcaError, Result};
use crate::matrix::{DenseMatrix, MatrixRef, SparseMatrix};
use crate::rng::{random_signs, stream, stream_rng};
use crate::scalar::Real;
use crate::transforms::wht::pruned_unnormalized;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    /// Random signs, Walsh–Hadamard mixing, uniform row sampling.
    Srht,
    /// One random target row and sign per source row.
    CountSketch,
    /// Uniform row sampling without mixing.
    Uniform,
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SketchKind::Srht => "srht",
            SketchKind::CountSketch => "countsketch",
            SketchKind::Uniform => "uniform",
        })
    }
}

impl FromStr for SketchKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "srht" => Ok(SketchKind::Srht),
            "cw" | "countsketch" => Ok(SketchKind::CountSketch),
            "uniform" => Ok(SketchKind::Uniform),
            other => Err(format!("unknown transform `{other}` (expected srht, cw or uniform)")),
        }
    }
}

/// The reproducible identity of an operator: realizing it again yields the same maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorDescriptor {
    pub kind: SketchKind,
    pub m: usize,
    pub r: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Realization {
    Srht {
        padded_rows: usize,
        /// `true` is `+1`; length `padded_rows`.
        signs: Vec<bool>,
        /// Sorted, distinct, `< padded_rows`.
        sample: Vec<usize>,
    },
    CountSketch {
        buckets: Vec<usize>,
        signs: Vec<bool>,
    },
    Uniform {
        sample: Vec<usize>,
    },
}

/// Counters collected while sketching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchStats {
    /// Stored input entries read during the pass.
    pub entries_touched: usize,
}

/// A realized random row transform `R^m -> R^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchOperator {
    kind: SketchKind,
    m: usize,
    r: usize,
    seed: u64,
    realization: Realization,
}

/// Linear maps that compress the row dimension. [`SketchOperator`] is the
/// built-in implementation; other fast transforms plug in here.
pub trait RowSketch {
    fn source_rows(&self) -> usize;
    fn target_rows(&self) -> usize;
    fn sketch_dense<T: Real>(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;
    fn sketch_sparse<T: Real>(&self, x: &SparseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.sketch_dense(&x.to_dense())
    }
}

fn sorted_sample(population: usize, r: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, stream::SAMPLE);
    let mut s = index::sample(&mut rng, population, r).into_vec();
    s.sort_unstable();
    s
}

impl SketchOperator {
    pub fn new(kind: SketchKind, m: usize, r: usize, seed: u64) -> Result<Self> {
        match kind {
            SketchKind::Srht => Self::srht(m, r, seed),
            SketchKind::CountSketch => Self::countsketch(m, r, seed),
            SketchKind::Uniform => sample_uniform(m, r, seed),
        }
    }

    pub fn from_descriptor(d: &OperatorDescriptor) -> Result<Self> {
        Self::new(d.kind, d.m, d.r, d.seed)
    }

    pub fn descriptor(&self) -> OperatorDescriptor {
        OperatorDescriptor {
            kind: self.kind,
            m: self.m,
            r: self.r,
            seed: self.seed,
        }
    }

    /// Subsampled randomized Hadamard transform over `m` rows zero-padded to
    /// the next power of two; `r` may not exceed the padded size.
    pub fn srht(m: usize, r: usize, seed: u64) -> Result<Self> {
        let padded_rows = m.max(1).next_power_of_two();
        if m == 0 || r == 0 || r > padded_rows {
            return Err(CcaError::InvalidSampleSize { r, m });
        }
        let signs = random_signs(padded_rows, &mut stream_rng(seed, stream::SIGNS));
        let sample = sorted_sample(padded_rows, r, seed);
        Ok(Self {
            kind: SketchKind::Srht,
            m,
            r,
            seed,
            realization: Realization::Srht {
                padded_rows,
                signs,
                sample,
            },
        })
    }

    /// SRHT with caller-chosen signs and sample set (testing and replay).
    pub fn srht_from_parts(m: usize, signs: Vec<bool>, mut sample: Vec<usize>) -> Result<Self> {
        let padded_rows = m.max(1).next_power_of_two();
        if signs.len() != padded_rows {
            return Err(CcaError::DimensionMismatch(format!(
                "{} signs for padded size {padded_rows}",
                signs.len()
            )));
        }
        sample.sort_unstable();
        let r = sample.len();
        if m == 0 || r == 0 || sample.windows(2).any(|w| w[0] == w[1]) {
            return Err(CcaError::InvalidSampleSize { r, m });
        }
        if let Some(&bad) = sample.iter().find(|&&i| i >= padded_rows) {
            return Err(CcaError::IndexOutOfRange {
                index: bad,
                len: padded_rows,
            });
        }
        Ok(Self {
            kind: SketchKind::Srht,
            m,
            r,
            seed: 0,
            realization: Realization::Srht {
                padded_rows,
                signs,
                sample,
            },
        })
    }

    pub fn countsketch(m: usize, r: usize, seed: u64) -> Result<Self> {
        if m == 0 || r == 0 {
            return Err(CcaError::InvalidSampleSize { r, m });
        }
        let mut rng = stream_rng(seed, stream::HASH);
        let buckets = (0..m).map(|_| rng.random_range(0..r)).collect();
        let signs = random_signs(m, &mut stream_rng(seed, stream::HASH_SIGNS));
        Ok(Self {
            kind: SketchKind::CountSketch,
            m,
            r,
            seed,
            realization: Realization::CountSketch { buckets, signs },
        })
    }

    /// CountSketch with explicit hash and sign maps.
    pub fn countsketch_from_maps(r: usize, buckets: Vec<usize>, signs: Vec<bool>) -> Result<Self> {
        let m = buckets.len();
        if signs.len() != m {
            return Err(CcaError::DimensionMismatch(format!(
                "{} signs for {m} buckets",
                signs.len()
            )));
        }
        if m == 0 || r == 0 {
            return Err(CcaError::InvalidSampleSize { r, m });
        }
        if let Some(&bad) = buckets.iter().find(|&&b| b >= r) {
            return Err(CcaError::IndexOutOfRange { index: bad, len: r });
        }
        Ok(Self {
            kind: SketchKind::CountSketch,
            m,
            r,
            seed: 0,
            realization: Realization::CountSketch { buckets, signs },
        })
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization(&self) -> &Realization {
        &self.realization
    }

    /// Sampled row indices for the sampling kinds.
    pub fn sample(&self) -> Option<&[usize]> {
        match &self.realization {
            Realization::Srht { sample, .. } | Realization::Uniform { sample } => Some(sample),
            Realization::CountSketch { .. } => None,
        }
    }

    /// Rescaling applied to sampled rows: `√(m/r)` (`√(m_pad/r)` for SRHT); 1 for CountSketch.
    pub fn rescale(&self) -> f64 {
        match &self.realization {
            Realization::Srht { padded_rows, .. } => (*padded_rows as f64 / self.r as f64).sqrt(),
            Realization::Uniform { .. } => (self.m as f64 / self.r as f64).sqrt(),
            Realization::CountSketch { .. } => 1.0,
        }
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.m {
            return Err(CcaError::DimensionMismatch(format!(
                "operator expects {} rows, matrix has {rows}",
                self.m
            )));
        }
        Ok(())
    }

    pub fn apply<T: Real>(&self, x: MatrixRef<'_, T>) -> Result<DenseMatrix<T>> {
        Ok(self.apply_instrumented(x)?.0)
    }

    pub fn apply_instrumented<T: Real>(
        &self,
        x: MatrixRef<'_, T>,
    ) -> Result<(DenseMatrix<T>, SketchStats)> {
        self.check_rows(x.rows())?;
        match (&self.realization, x) {
            (Realization::CountSketch { buckets, signs }, MatrixRef::Sparse(s)) => {
                Ok(countsketch_sparse(self.r, buckets, signs, s))
            }
            (Realization::CountSketch { buckets, signs }, MatrixRef::Dense(d)) => {
                let out = countsketch_dense(self.r, buckets, signs, d);
                Ok((out, SketchStats { entries_touched: d.rows() * d.cols() }))
            }
            (_, x) => {
                let d = x.to_dense();
                let out = match &self.realization {
                    Realization::Srht {
                        padded_rows,
                        signs,
                        sample,
                    } => srht_dense(*padded_rows, signs, sample, &d),
                    Realization::Uniform { sample } => {
                        let scale = T::lit(self.rescale());
                        d.select_rows(sample)?.scale(scale)
                    }
                    Realization::CountSketch { .. } => unreachable!("handled above"),
                };
                Ok((out, SketchStats { entries_touched: d.rows() * d.cols() }))
            }
        }
    }
}

impl RowSketch for SketchOperator {
    fn source_rows(&self) -> usize {
        self.m
    }

    fn target_rows(&self) -> usize {
        self.r
    }

    fn sketch_dense<T: Real>(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.apply(MatrixRef::Dense(x))
    }

    fn sketch_sparse<T: Real>(&self, x: &SparseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.apply(MatrixRef::Sparse(x))
    }
}

/// `r` distinct rows drawn uniformly from `[m]`, rescaled by `√(m/r)`.
pub fn sample_uniform(m: usize, r: usize, seed: u64) -> Result<SketchOperator> {
    if r == 0 || r > m {
        return Err(CcaError::InvalidSampleSize { r, m });
    }
    Ok(SketchOperator {
        kind: SketchKind::Uniform,
        m,
        r,
        seed,
        realization: Realization::Uniform {
            sample: sorted_sample(m, r, seed),
        },
    })
}

/// `√(m_pad/r) · S H D [X; 0]`, one column at a time.
fn srht_dense<T: Real>(
    padded_rows: usize,
    signs: &[bool],
    sample: &[usize],
    x: &DenseMatrix<T>,
) -> DenseMatrix<T> {
    let r = sample.len();
    let m = x.rows();
    // normalization m_pad^{-1/2} times rescale √(m_pad/r)
    let scale = T::one() / T::usize(r).sqrt();
    let mut out = DenseMatrix::zeros(r, x.cols());
    out.as_mut_slice()
        .par_chunks_mut(r)
        .enumerate()
        .for_each_init(
            || (vec![T::zero(); padded_rows], vec![T::zero(); padded_rows]),
            |(signed, scratch), (j, dst)| {
                for (i, (&v, &plus)) in x.col(j).iter().zip(signs).enumerate() {
                    signed[i] = if plus { v } else { -v };
                }
                signed[m..].iter_mut().for_each(|v| *v = T::zero());
                pruned_unnormalized(signed, sample, 0, dst, scratch);
                dst.iter_mut().for_each(|v| *v *= scale);
            },
        );
    out
}

fn countsketch_dense<T: Real>(
    r: usize,
    buckets: &[usize],
    signs: &[bool],
    x: &DenseMatrix<T>,
) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(r, x.cols());
    out.as_mut_slice()
        .par_chunks_mut(r)
        .enumerate()
        .for_each(|(j, dst)| {
            for ((&v, &b), &plus) in x.col(j).iter().zip(buckets).zip(signs) {
                if plus {
                    dst[b] += v;
                } else {
                    dst[b] -= v;
                }
            }
        });
    out
}

/// One pass over the stored entries of a CSR matrix.
fn countsketch_sparse<T: Real>(
    r: usize,
    buckets: &[usize],
    signs: &[bool],
    x: &SparseMatrix<T>,
) -> (DenseMatrix<T>, SketchStats) {
    let mut out = DenseMatrix::zeros(r, x.cols());
    let mut touched = 0usize;
    let data = out.as_mut_slice();
    for i in 0..x.rows() {
        let (cols, vals) = x.row(i);
        let b = buckets[i];
        for (&j, &v) in cols.iter().zip(vals) {
            let slot = &mut data[j * r + b];
            if signs[i] {
                *slot += v;
            } else {
                *slot -= v;
            }
            touched += 1;
        }
    }
    (out, SketchStats { entries_touched: touched })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_matrix;
    use crate::transforms::wht::wht_in_place;

    #[test]
    fn realization_is_a_function_of_descriptor() {
        for kind in [SketchKind::Srht, SketchKind::CountSketch, SketchKind::Uniform] {
            let a = SketchOperator::new(kind, 100, 20, 99).unwrap();
            let b = SketchOperator::from_descriptor(&a.descriptor()).unwrap();
            assert_eq!(a, b);
            let c = SketchOperator::new(kind, 100, 20, 100).unwrap();
            assert_ne!(a.realization(), c.realization());
        }
    }

    #[test]
    fn descriptor_json() {
        let op = SketchOperator::srht(10, 4, 3).unwrap();
        let json = serde_json::to_string(&op.descriptor()).unwrap();
        assert_eq!(json, r#"{"kind":"srht","m":10,"r":4,"seed":3}"#);
        let back: OperatorDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, op.descriptor());
    }

    #[test]
    fn srht_realization_invariants() {
        let op = SketchOperator::srht(100, 30, 5).unwrap();
        match op.realization() {
            Realization::Srht {
                padded_rows,
                signs,
                sample,
            } => {
                assert_eq!(*padded_rows, 128);
                assert_eq!(signs.len(), 128);
                assert_eq!(sample.len(), 30);
                assert!(sample.windows(2).all(|w| w[0] < w[1]));
                assert!(sample.iter().all(|&i| i < 128));
            }
            _ => panic!(),
        }
        assert!(SketchOperator::srht(100, 129, 5).is_err());
        assert!(SketchOperator::srht(100, 0, 5).is_err());
    }

    #[test]
    fn uniform_full_sample_is_identity() {
        let op = sample_uniform(10, 10, 1).unwrap();
        assert_eq!(op.sample().unwrap(), (0..10).collect::<Vec<_>>().as_slice());
        assert_eq!(op.rescale(), 1.0);
        assert!(matches!(sample_uniform(10, 11, 1), Err(CcaError::InvalidSampleSize { .. })));
        assert!(matches!(sample_uniform(10, 0, 1), Err(CcaError::InvalidSampleSize { .. })));
    }

    #[test]
    fn uniform_sample_is_reproducible() {
        let a = sample_uniform(10, 3, 77).unwrap();
        let b = sample_uniform(10, 3, 77).unwrap();
        assert_eq!(a.sample(), b.sample());
        assert!((a.rescale() - (10.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn srht_ones_column_hand_computed() {
        // m = 4, D = diag(+,-,+,+), T = {0, 3}. H_4 rows 0 and 3 are
        // (1,1,1,1) and (1,-1,-1,1); D·1 = (1,-1,1,1).
        // √(4/2) · (1/2) · (2, 2) = (√2, √2).
        let op = SketchOperator::srht_from_parts(4, vec![true, false, true, true], vec![0, 3]).unwrap();
        let x = DenseMatrix::from_col_major(4, 1, vec![1.0f64; 4]).unwrap();
        let y = op.apply(MatrixRef::Dense(&x)).unwrap();
        assert!((y.get(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((y.get(1, 0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn srht_full_sample_with_plus_signs_is_plain_wht() {
        let x = gaussian_matrix::<f64>(8, 2, &mut stream_rng(1, 0));
        let op = SketchOperator::srht_from_parts(8, vec![true; 8], (0..8).collect()).unwrap();
        let y = op.apply(MatrixRef::Dense(&x)).unwrap();
        let mut h = x.clone();
        wht_in_place(&mut h).unwrap();
        assert!(y.sub(&h).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn srht_pads_non_power_of_two() {
        let x = gaussian_matrix::<f64>(5, 2, &mut stream_rng(4, 0));
        let op = SketchOperator::srht(5, 8, 12).unwrap();
        let y = op.apply(MatrixRef::Dense(&x)).unwrap();
        // full sample of the padded rotation preserves the Gram matrix
        let diff = y.gram().sub(&x.gram()).unwrap().max_abs();
        assert!(diff < 1e-12, "{diff}");
        assert!(op.apply(MatrixRef::Dense(&DenseMatrix::<f64>::zeros(6, 1))).is_err());
    }

    #[test]
    fn countsketch_identity_maps() {
        let x = gaussian_matrix::<f64>(6, 3, &mut stream_rng(8, 0));
        let op = SketchOperator::countsketch_from_maps(6, (0..6).collect(), vec![true; 6]).unwrap();
        assert_eq!(op.apply(MatrixRef::Dense(&x)).unwrap(), x);
        let s = SparseMatrix::from_dense(&x);
        assert_eq!(op.apply(MatrixRef::Sparse(&s)).unwrap(), x);
    }

    #[test]
    fn countsketch_single_entry_keeps_magnitude() {
        let e = SparseMatrix::from_triplets(50, 4, vec![(0, 0, 1.0f64)]).unwrap();
        for seed in 0..20 {
            let op = SketchOperator::countsketch(50, 7, seed).unwrap();
            let (y, stats) = op.apply_instrumented(MatrixRef::Sparse(&e)).unwrap();
            let nz: Vec<f64> = y.as_slice().iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert_eq!(nz[0].abs(), 1.0);
            assert_eq!(stats.entries_touched, 1);
        }
    }

    #[test]
    fn countsketch_dense_and_sparse_agree() {
        let x = gaussian_matrix::<f64>(40, 3, &mut stream_rng(2, 0));
        let op = SketchOperator::countsketch(40, 9, 31).unwrap();
        let d = op.apply(MatrixRef::Dense(&x)).unwrap();
        let s = op.apply(MatrixRef::Sparse(&SparseMatrix::from_dense(&x))).unwrap();
        assert!(d.sub(&s).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn kind_names() {
        assert_eq!("cw".parse::<SketchKind>().unwrap(), SketchKind::CountSketch);
        assert_eq!(SketchKind::CountSketch.to_string(), "countsketch");
        assert!("fjlt".parse::<SketchKind>().is_err());
    }
}
