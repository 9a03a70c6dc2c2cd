//! Transformer classifier over `[B × T × S]` sensor windows.

mod checkpoint;
mod config;
pub mod layers;
mod transformer;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_CONFIG, CHECKPOINT_PARAMS};
pub use config::ModelConfig;
pub use layers::positional_encoding;
pub use transformer::{ForwardTrace, ForwardVars, TransformerClassifier};
