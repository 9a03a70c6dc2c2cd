//! Multi-IMU hand gesture classification.

pub mod ablation;
pub mod baseline;
pub mod dataset;
pub mod error;
pub mod model;
pub mod train;

pub use error::{Error, Result};
