//! Minimal dense tensors with tape-based reverse-mode differentiation.
//!
//! Storage is generic over [`Real`]: `f32` for training and `f64` as a
//! reference precision for oracle comparisons. All kernels are sequential
//! with a fixed summation order, so results are bit-reproducible.

pub mod adam;
pub mod error;
pub mod gradcheck;
pub mod ops;
pub mod real;
pub mod tape;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use error::{Result, TensorError};
pub use real::Real;
pub use tape::{Tape, Var};
pub use tensor::Tensor;
