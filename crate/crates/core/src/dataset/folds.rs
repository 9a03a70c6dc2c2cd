use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GestureDataset;
use crate::error::{Error, Result};

/// One train/test partition of sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Trials whose samples form the test set.
    pub test_trials: Vec<u32>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub folds: Vec<Fold>,
}

impl Fold {
    /// Splits `ds` so that exactly the samples of `test_trials` are held out.
    pub fn from_test_trials(ds: &GestureDataset, test_trials: &[u32]) -> Fold {
        let held: BTreeSet<u32> = test_trials.iter().copied().collect();
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..ds.n_samples()).partition(|&i| held.contains(&ds.trial_ids[i]));
        Fold {
            test_trials: held.into_iter().collect(),
            train,
            test,
        }
    }

    /// Disjointness, index range and whole-trial membership.
    pub fn validate(&self, ds: &GestureDataset) -> Result<()> {
        let n = ds.n_samples();
        let mut side: BTreeMap<u32, bool> = BTreeMap::new();
        let mut seen = vec![false; n];
        for (indices, is_test) in [(&self.train, false), (&self.test, true)] {
            for &i in indices {
                if i >= n {
                    return Err(Error::Validation(format!(
                        "fold index {i} out of range for {n} samples"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Validation(format!("sample {i} appears twice in a fold")));
                }
                let trial = ds.trial_ids[i];
                if *side.entry(trial).or_insert(is_test) != is_test {
                    return Err(Error::Validation(format!(
                        "trial {trial} is split between train and test"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl FoldSpec {
    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn validate(&self, ds: &GestureDataset) -> Result<()> {
        self.folds.iter().try_for_each(|f| f.validate(ds))
    }

    /// Additionally requires that test sets cover every trial exactly once.
    pub fn validate_loto(&self, ds: &GestureDataset) -> Result<()> {
        self.validate(ds)?;
        let mut covered = vec![0usize; ds.n_samples()];
        for f in &self.folds {
            for &i in &f.test {
                covered[i] += 1;
            }
        }
        if let Some(i) = covered.iter().position(|&c| c != 1) {
            return Err(Error::Validation(format!(
                "sample {i} is tested {} times across folds",
                covered[i]
            )));
        }
        Ok(())
    }
}

/// Leave-one-trial-out: one fold per distinct trial id, ascending.
pub fn make_loto_folds(ds: &GestureDataset) -> Result<FoldSpec> {
    let trials = ds.distinct_trials();
    if trials.len() < 2 {
        return Err(Error::Usage(format!(
            "leave-one-trial-out needs at least 2 trials, found {}",
            trials.len()
        )));
    }
    Ok(FoldSpec {
        folds: trials.iter().map(|&t| Fold::from_test_trials(ds, &[t])).collect(),
    })
}

/// Holds out `n_test_trials` whole trials chosen by `seed`.
pub fn trial_holdout(ds: &GestureDataset, n_test_trials: usize, seed: u64) -> Result<Fold> {
    let mut trials = ds.distinct_trials();
    if n_test_trials == 0 || n_test_trials >= trials.len() {
        return Err(Error::Usage(format!(
            "cannot hold out {n_test_trials} of {} trials and keep both sides non-empty",
            trials.len()
        )));
    }
    trials.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(Fold::from_test_trials(ds, &trials[..n_test_trials]))
}
