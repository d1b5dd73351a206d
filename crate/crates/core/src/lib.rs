//! Exact and sketched canonical correlation analysis for tall matrix pairs.

pub mod approx;
pub mod cca;
pub mod error;
pub mod experiments;
pub mod matrix;
pub mod rng;
mod scalar;
pub mod transforms;
pub mod verify;

pub use approx::{approx_cca, ApproxConfig, ApproxDiagnostics, SizeMode};
pub use cca::{exact_cca, CcaResult, Method};
pub use error::{CcaError, Result};
pub use matrix::{DenseMatrix, MatrixRef, SparseMatrix};
pub use scalar::Real;
pub use transforms::{SketchKind, SketchOperator};

pub type Matrix = DenseMatrix<f64>;
pub type MatrixF32 = DenseMatrix<f32>;
pub type Sparse = SparseMatrix<f64>;
pub type SparseF32 = SparseMatrix<f32>;
pub type Cca = CcaResult<f64>;
