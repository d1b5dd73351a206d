//! Randomized row-compression operators.

mod operator;
pub mod wht;

pub use operator::{
    sample_uniform, OperatorDescriptor, Realization, RowSketch, SketchKind, SketchOperator,
    SketchStats,
};
pub use wht::{subsampled_wht, subsampled_wht_with, wht_in_place, wht_vector, WhtStrategy};
