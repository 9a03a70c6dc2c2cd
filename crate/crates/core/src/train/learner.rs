use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{predict_dataset, train, TrainConfig};
use crate::baseline::{feature_matrix, tree_fit, DecisionTree, TreeParams};
use crate::dataset::GestureDataset;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TransformerClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Transformer,
    Tree,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Transformer => "transformer",
            ModelKind::Tree => "tree",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transformer" => Ok(ModelKind::Transformer),
            "tree" => Ok(ModelKind::Tree),
            other => Err(Error::Usage(format!(
                "unknown model {other:?}, expected transformer or tree"
            ))),
        }
    }
}

/// Anything that can be fitted on one split and predict another.
pub trait Learner: Sync {
    fn kind(&self) -> ModelKind;

    /// Fits a fresh model on `train` and predicts every sample of `test`.
    fn fit_predict(&self, train: &GestureDataset, test: &GestureDataset, seed: u64) -> Result<Vec<usize>>;
}

/// Transformer whose shape is taken from the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerLearner {
    /// Architecture; T, S and C are overwritten from the data.
    pub template: ModelConfig,
    pub train: TrainConfig,
}

impl Default for TransformerLearner {
    fn default() -> Self {
        TransformerLearner {
            template: ModelConfig::new(1, 1, 2),
            train: TrainConfig::default(),
        }
    }
}

impl TransformerLearner {
    pub fn config_for(&self, ds: &GestureDataset) -> ModelConfig {
        ModelConfig {
            window_length: ds.window_length(),
            n_channels: ds.n_channels(),
            n_classes: ds.n_classes(),
            ..self.template.clone()
        }
    }

    /// Fresh model initialized and trained with `seed`.
    pub fn fit(&self, ds: &GestureDataset, seed: u64) -> Result<TransformerClassifier<f32>> {
        let mut model = TransformerClassifier::new(self.config_for(ds), seed)?;
        train(
            &mut model,
            ds,
            &TrainConfig {
                seed,
                ..self.train.clone()
            },
        )?;
        Ok(model)
    }
}

impl Learner for TransformerLearner {
    fn kind(&self) -> ModelKind {
        ModelKind::Transformer
    }

    fn fit_predict(&self, train: &GestureDataset, test: &GestureDataset, seed: u64) -> Result<Vec<usize>> {
        predict_dataset(&self.fit(train, seed)?, test)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeLearner {
    pub params: TreeParams,
}

impl TreeLearner {
    pub fn fit(&self, ds: &GestureDataset) -> Result<DecisionTree> {
        let all: Vec<usize> = (0..ds.n_samples()).collect();
        tree_fit(&feature_matrix(ds, &all)?, &ds.labels, ds.n_classes(), self.params)
    }

    pub fn predict(tree: &DecisionTree, ds: &GestureDataset) -> Result<Vec<usize>> {
        let all: Vec<usize> = (0..ds.n_samples()).collect();
        tree.predict(&feature_matrix(ds, &all)?)
    }
}

impl Learner for TreeLearner {
    fn kind(&self) -> ModelKind {
        ModelKind::Tree
    }

    /// The tree is deterministic, so `seed` is unused.
    fn fit_predict(&self, train: &GestureDataset, test: &GestureDataset, _seed: u64) -> Result<Vec<usize>> {
        TreeLearner::predict(&self.fit(train)?, test)
    }
}
