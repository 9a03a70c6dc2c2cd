//! Training loop, evaluation, confusion matrices and cross-validation.

mod confusion;
mod crossval;
mod learner;
mod trainer;

pub use confusion::ConfusionMatrix;
pub use crossval::{crossval, CrossvalResult, FoldResult, StatsSource};
pub use learner::{Learner, ModelKind, TransformerLearner, TreeLearner};
pub use trainer::{batch_tensor, evaluate, predict_dataset, train, EpochLog, TrainConfig, TrainLog};
