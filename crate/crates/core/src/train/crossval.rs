use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, Learner};
use crate::dataset::{ChannelStats, FoldSpec, GestureDataset};
use crate::error::{Error, Result};

/// Where the standardization statistics of each split come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StatsSource {
    /// Fit on the training samples and apply to both splits.
    #[default]
    TrainOnly,
    /// Deliberately wrong: the test split is standardized with its own
    /// statistics. Exists only so tests can show the leak is measurable.
    LeakTestStatistics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_trials: Vec<u32>,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Statistics used for the training split.
    pub stats: ChannelStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalResult {
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    /// Population standard deviation of the fold accuracies.
    pub std_accuracy: f64,
    /// Accuracy of all test predictions pooled together.
    pub pooled_accuracy: f64,
    pub pooled: ConfusionMatrix,
}

impl CrossvalResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,test_trials,n_train,n_test,accuracy\n");
        for f in &self.folds {
            let trials: Vec<String> = f.test_trials.iter().map(u32::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6}",
                f.fold,
                trials.join(" "),
                f.n_train,
                f.n_test,
                f.accuracy
            );
        }
        out
    }
}

/// Seed for a fold, derived from its held-out trials so it does not depend
/// on the position of the fold in the list.
fn fold_seed(seed: u64, test_trials: &[u32]) -> u64 {
    test_trials.iter().fold(seed, |s, &t| {
        s.rotate_left(5) ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    })
}

/// Trains a fresh model per fold with standardization refit on that fold.
pub fn crossval(
    learner: &dyn Learner,
    ds: &GestureDataset,
    folds: &FoldSpec,
    seed: u64,
    stats_source: StatsSource,
) -> Result<CrossvalResult> {
    if folds.is_empty() {
        return Err(Error::Usage("cross-validation needs at least one fold".into()));
    }
    folds.validate(ds)?;
    let results = folds
        .folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| -> Result<FoldResult> {
            if fold.train.is_empty() || fold.test.is_empty() {
                return Err(Error::Validation(format!("fold {k} has an empty side")));
            }
            let train_raw = ds.subset(&fold.train)?;
            let test_raw = ds.subset(&fold.test)?;
            let all_train: Vec<usize> = (0..train_raw.n_samples()).collect();
            let stats = ChannelStats::fit(&train_raw, &all_train)?;
            let test_stats = match stats_source {
                StatsSource::TrainOnly => stats.clone(),
                StatsSource::LeakTestStatistics => {
                    ChannelStats::fit(&test_raw, &(0..test_raw.n_samples()).collect::<Vec<_>>())?
                }
            };
            let train = stats.apply(&train_raw)?;
            let test = test_stats.apply(&test_raw)?;
            let pred = learner.fit_predict(&train, &test, fold_seed(seed, &fold.test_trials))?;
            let confusion = ConfusionMatrix::from_predictions(ds.class_names.clone(), &test.labels, &pred)?;
            Ok(FoldResult {
                fold: k,
                test_trials: fold.test_trials.clone(),
                n_train: fold.train.len(),
                n_test: fold.test.len(),
                accuracy: confusion.accuracy(),
                confusion,
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let accs: Vec<f64> = results.iter().map(|f| f.accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64;
    let mut pooled = ConfusionMatrix::new(ds.class_names.clone());
    for f in &results {
        pooled.merge(&f.confusion)?;
    }
    Ok(CrossvalResult {
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        pooled_accuracy: pooled.accuracy(),
        pooled,
        folds: results,
    })
}
