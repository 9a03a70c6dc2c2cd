//! Sensor-subset sweeps and single-finger attribution.

mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{apply_sensor_mask, trial_holdout, ChannelStats, Fold, GestureDataset, SensorMask};
use crate::error::{Error, Result};
use crate::train::{ConfusionMatrix, Learner};

pub use svg::render_svg;

/// All `C(n, k)` subsets of `0..n` in lexicographic order.
pub fn enumerate_sensor_subsets(n_sensors: usize, k: usize) -> Result<Vec<SensorMask>> {
    if k == 0 || k > n_sensors {
        return Err(Error::Usage(format!("subset size {k} must be in 1..={n_sensors}")));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(SensorMask::new(idx.iter().copied())?);
        // advance the rightmost index that still has room
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n_sensors - k + i) else {
            return Ok(out);
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub k_values: Vec<usize>,
    /// Fractions of the training trials to keep, each in (0, 1].
    pub train_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Fraction of trials held out as the shared test split.
    pub test_fraction: f64,
    pub split_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            k_values: vec![1, 2, 3, 4, 5],
            train_fractions: vec![1.0],
            seeds: vec![0, 1, 2],
            test_fraction: 0.2,
            split_seed: 0,
            jobs: None,
        }
    }
}

impl AblationConfig {
    fn validate(&self, n_sensors: usize) -> Result<()> {
        if self.k_values.is_empty() || self.train_fractions.is_empty() || self.seeds.is_empty() {
            return Err(Error::Usage("ablation needs at least one k, fraction and seed".into()));
        }
        if let Some(k) = self.k_values.iter().find(|&&k| k == 0 || k > n_sensors) {
            return Err(Error::Usage(format!("k={k} is outside 1..={n_sensors}")));
        }
        if let Some(f) = self.train_fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::Usage(format!("train fraction {f} is outside (0, 1]")));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Usage(format!(
                "test fraction {} is outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::Usage("jobs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// Sensor names joined with `+`.
    pub subset: String,
    pub sensors: Vec<usize>,
    pub k: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub k: usize,
    pub train_fraction: f64,
    pub n_runs: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub rows: Vec<AblationRow>,
    /// The held-out split shared by every cell.
    pub split: Fold,
}

impl AblationResult {
    /// Mean, min and max accuracy per `(k, fraction)`, sorted by k then fraction.
    pub fn aggregates(&self) -> Vec<AggregateRow> {
        let mut groups: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            groups
                .entry((r.k, r.train_fraction.to_bits()))
                .or_default()
                .push(r.accuracy);
        }
        groups
            .into_iter()
            .map(|((k, f), accs)| AggregateRow {
                k,
                train_fraction: f64::from_bits(f),
                n_runs: accs.len(),
                mean: accs.iter().sum::<f64>() / accs.len() as f64,
                min: accs.iter().copied().fold(f64::INFINITY, f64::min),
                max: accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
            .collect()
    }

    pub fn mean_accuracy(&self, k: usize, train_fraction: f64) -> Option<f64> {
        self.aggregates()
            .into_iter()
            .find(|a| a.k == k && a.train_fraction == train_fraction)
            .map(|a| a.mean)
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from("subset,k,fraction,seed,n_train,n_test,accuracy\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6}",
                r.subset, r.k, r.train_fraction, r.seed, r.n_train, r.n_test, r.accuracy
            );
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from("k,fraction,n_runs,mean,min,max\n");
        for a in self.aggregates() {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6}",
                a.k, a.train_fraction, a.n_runs, a.mean, a.min, a.max
            );
        }
        out
    }
}

/// Keeps `floor(fraction · trials)` whole trials of `pool`, chosen by `seed`.
/// For a fixed seed the kept trials of a smaller fraction are a subset of
/// those of a larger one.
pub fn subsample_trials(ds: &GestureDataset, pool: &[usize], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    let mut trials: Vec<u32> = pool.iter().map(|&i| ds.trial_ids[i]).collect();
    trials.sort_unstable();
    trials.dedup();
    let keep = (fraction * trials.len() as f64).floor() as usize;
    if keep == 0 {
        return Err(Error::Usage(format!(
            "train fraction {fraction} of {} trials leaves no training data",
            trials.len()
        )));
    }
    trials.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let kept: std::collections::BTreeSet<u32> = trials[..keep].iter().copied().collect();
    Ok(pool
        .iter()
        .copied()
        .filter(|&i| kept.contains(&ds.trial_ids[i]))
        .collect())
}

/// Shared held-out split: `test_fraction` of the trials, at least one.
pub fn ablation_split(ds: &GestureDataset, test_fraction: f64, split_seed: u64) -> Result<Fold> {
    let n_trials = ds.distinct_trials().len();
    if n_trials < 2 {
        return Err(Error::Usage(format!(
            "ablation needs at least 2 trials, found {n_trials}"
        )));
    }
    let n_test = ((test_fraction * n_trials as f64).round() as usize).clamp(1, n_trials - 1);
    trial_holdout(ds, n_test, split_seed)
}

/// Masks, standardizes on the training side only, fits and scores one cell.
fn run_cell(
    learner: &dyn Learner,
    ds: &GestureDataset,
    mask: &SensorMask,
    train_idx: &[usize],
    test_idx: &[usize],
    seed: u64,
) -> Result<ConfusionMatrix> {
    let masked = apply_sensor_mask(ds, mask)?;
    let train_raw = masked.subset(train_idx)?;
    let test_raw = masked.subset(test_idx)?;
    let stats = ChannelStats::fit(&train_raw, &(0..train_raw.n_samples()).collect::<Vec<_>>())?;
    let (train, test) = (stats.apply(&train_raw)?, stats.apply(&test_raw)?);
    let pred = learner.fit_predict(&train, &test, seed)?;
    ConfusionMatrix::from_predictions(ds.class_names.clone(), &test.labels, &pred)
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Every (subset, fraction, seed) cell, trained from scratch and scored on
/// one shared test split.
pub fn ablation_sweep(ds: &GestureDataset, cfg: &AblationConfig, learner: &dyn Learner) -> Result<AblationResult> {
    let n_sensors = ds.sensor_layout.len();
    cfg.validate(n_sensors)?;
    let split = ablation_split(ds, cfg.test_fraction, cfg.split_seed)?;

    let mut cells = Vec::new();
    for &k in &cfg.k_values {
        for mask in enumerate_sensor_subsets(n_sensors, k)? {
            for &fraction in &cfg.train_fractions {
                for &seed in &cfg.seeds {
                    let train_idx = subsample_trials(ds, &split.train, fraction, seed)?;
                    cells.push((mask.clone(), fraction, seed, train_idx));
                }
            }
        }
    }
    let rows = in_pool(cfg.jobs, || {
        cells
            .par_iter()
            .map(|(mask, fraction, seed, train_idx)| -> Result<AblationRow> {
                let m = run_cell(learner, ds, mask, train_idx, &split.test, *seed)?;
                Ok(AblationRow {
                    subset: mask.label(ds),
                    sensors: mask.selected().collect(),
                    k: mask.len(),
                    train_fraction: *fraction,
                    seed: *seed,
                    n_train: train_idx.len(),
                    n_test: split.test.len(),
                    accuracy: m.accuracy(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(AblationResult { rows, split })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerAttribution {
    pub sensor: String,
    pub confusion: ConfusionMatrix,
}

/// One single-sensor model per sensor, each scored on the shared test split.
pub fn finger_attribution(
    ds: &GestureDataset,
    learner: &dyn Learner,
    test_fraction: f64,
    split_seed: u64,
    seed: u64,
    jobs: Option<usize>,
) -> Result<Vec<FingerAttribution>> {
    let split = ablation_split(ds, test_fraction, split_seed)?;
    let masks = enumerate_sensor_subsets(ds.sensor_layout.len(), 1)?;
    in_pool(jobs, || {
        masks
            .par_iter()
            .map(|mask| {
                Ok(FingerAttribution {
                    sensor: mask.label(ds),
                    confusion: run_cell(learner, ds, mask, &split.train, &split.test, seed)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Matrices rendered next to each other, one titled block per sensor.
pub fn render_side_by_side(items: &[FingerAttribution]) -> String {
    let blocks: Vec<Vec<String>> = items
        .iter()
        .map(|a| {
            let mut lines = vec![format!("{} (acc {:.3})", a.sensor, a.confusion.accuracy())];
            lines.extend(a.confusion.render_text().lines().map(str::to_string));
            lines
        })
        .collect();
    let widths: Vec<usize> = blocks
        .iter()
        .map(|b| b.iter().map(|l| l.len()).max().unwrap_or(0))
        .collect();
    let height = blocks.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    for row in 0..height {
        let line: Vec<String> = blocks
            .iter()
            .zip(&widths)
            .map(|(b, &w)| format!("{:<w$}", b.get(row).map_or("", String::as_str)))
            .collect();
        out.push_str(line.join("   ").trim_end());
        out.push('\n');
    }
    out
}

/// Long-format CSV: `sensor,true,predicted,count`.
pub fn attribution_csv(items: &[FingerAttribution]) -> String {
    let mut out = String::from("sensor,true,predicted,count\n");
    for a in items {
        let names = &a.confusion.class_names;
        for (i, row) in a.confusion.counts.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{v}", a.sensor, names[i], names[j]);
            }
        }
    }
    out
}
