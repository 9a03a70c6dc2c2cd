use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use glovenet_core::ablation::{
    ablation_split, ablation_sweep, attribution_csv, finger_attribution, render_side_by_side, render_svg,
    AblationConfig,
};
use glovenet_core::baseline::{DecisionTree, TreeParams};
use glovenet_core::dataset::{generate_synthetic, load_dataset, make_loto_folds, save_dataset, ChannelStats, Fold};
use glovenet_core::dataset::{GestureDataset, DATA_FILE, MANIFEST_FILE};
use glovenet_core::model::{
    load_checkpoint, save_checkpoint, TransformerClassifier, CHECKPOINT_CONFIG, CHECKPOINT_PARAMS,
};
use glovenet_core::train::{
    self, crossval as run_crossval, predict_dataset, ConfusionMatrix, Learner, ModelKind, StatsSource, TrainConfig,
    TransformerLearner, TreeLearner,
};
use glovenet_core::{Error, Result};

use crate::args::{
    AblateArgs, AttributeArgs, CrossvalArgs, EvalArgs, FitArgs, GenerateArgs, InspectArgs, ReportArgs, SplitArg,
    TrainArgs,
};
use crate::run::{dataset_hash, read_manifest, RunDir};

const TRAINING_FILE: &str = "training.json";
const SPLIT_FILE: &str = "split.json";
const STATS_FILE: &str = "standardization.json";
const TREE_FILE: &str = "tree.json";

/// What `train` leaves behind besides the weights, enough for `eval` to
/// rebuild the exact test inputs.
#[derive(Debug, Serialize, Deserialize)]
struct TrainingInfo {
    model: ModelKind,
    dataset: String,
    dataset_hash: String,
    window_length: usize,
    n_channels: usize,
    class_names: Vec<String>,
    train: TrainConfig,
    tree: Option<TreeParams>,
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!("{name} must be in (0, 1), got {f}")))
    }
}

fn tree_params(fit: &FitArgs) -> Result<TreeParams> {
    if fit.max_depth == 0 {
        return Err(Error::Usage("--max-depth must be at least 1".into()));
    }
    Ok(TreeParams {
        max_depth: fit.max_depth,
        ..TreeParams::default()
    })
}

/// Learner for the flags, checked against the dataset before any training.
fn learner(fit: &FitArgs, ds: &GestureDataset) -> Result<Box<dyn Learner>> {
    Ok(match ModelKind::from(fit.model) {
        ModelKind::Transformer => {
            let l = TransformerLearner {
                template: fit.model_template(),
                train: fit.train_config(),
            };
            l.train.validate()?;
            l.config_for(ds).validate()?;
            Box::new(l)
        }
        ModelKind::Tree => Box::new(TreeLearner {
            params: tree_params(fit)?,
        }),
    })
}

fn all_indices(ds: &GestureDataset) -> Vec<usize> {
    (0..ds.n_samples()).collect()
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let mut run = RunDir::create("generate", &a.out, &[])?;
    let ds = generate_synthetic(a.vocab.into(), a.n, a.len, a.seed)?;
    save_dataset(&ds, &a.out)?;
    run.record(MANIFEST_FILE);
    run.record(DATA_FILE);
    let hash = dataset_hash(&a.out)?;
    println!(
        "wrote {}: {} samples, T={}, S={}, {} classes, {} trials",
        a.out.display(),
        ds.n_samples(),
        ds.window_length(),
        ds.n_channels(),
        ds.n_classes(),
        ds.distinct_trials().len()
    );
    run.finish(a, vec![a.seed], Some(hash))
}

pub fn inspect(a: &InspectArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let mut out = String::new();
    let _ = writeln!(out, "dataset      {}", ds.name);
    let _ = writeln!(out, "hash         {}", dataset_hash(&a.data)?);
    let _ = writeln!(
        out,
        "shape        N={} T={} S={}",
        ds.n_samples(),
        ds.window_length(),
        ds.n_channels()
    );
    let _ = writeln!(out, "sample rate  {} Hz", ds.sample_rate_hz);
    let sensors: Vec<String> = ds
        .sensor_layout
        .iter()
        .map(|s| format!("{}({})", s.name, s.channels))
        .collect();
    let _ = writeln!(out, "sensors      {}", sensors.join(" "));
    let mut subjects = ds.subject_ids.clone();
    subjects.sort_unstable();
    subjects.dedup();
    let _ = writeln!(
        out,
        "trials       {}  subjects {}",
        ds.distinct_trials().len(),
        subjects.len()
    );
    let _ = writeln!(out, "classes");
    for (name, count) in ds.class_names.iter().zip(ds.class_counts()) {
        let _ = writeln!(out, "  {name:<14} {count}");
    }
    print!("{out}");
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    check_fraction("--test-fraction", a.test_fraction)?;
    let ds = load_dataset(&a.data)?;
    let model_kind = ModelKind::from(a.fit.model);
    // validates the flags against the data before anything is written
    learner(&a.fit, &ds)?;
    let hash = dataset_hash(&a.data)?;
    let mut run = RunDir::create("train", &a.out, &[&a.data])?;

    let split = ablation_split(&ds, a.test_fraction, a.split_seed)?;
    let train_raw = ds.subset(&split.train)?;
    let stats = ChannelStats::fit(&train_raw, &all_indices(&train_raw))?;
    let train_ds = stats.apply(&train_raw)?;

    let mut tree = None;
    match model_kind {
        ModelKind::Transformer => {
            let template = TransformerLearner {
                template: a.fit.model_template(),
                train: a.fit.train_config(),
            };
            let mut model = TransformerClassifier::new(template.config_for(&train_ds), a.fit.seed)?;
            let log = train::train(&mut model, &train_ds, &template.train)?;
            save_checkpoint(&model, &a.out)?;
            run.record(CHECKPOINT_CONFIG);
            run.record(CHECKPOINT_PARAMS);
            run.write("train_log.csv", log.to_csv())?;
            println!(
                "trained transformer ({} parameters) for {} epochs: loss {:.4}, train accuracy {:.4}",
                model.param_count(),
                log.epochs.len(),
                log.epochs.last().map_or(log.initial_loss, |e| e.loss),
                log.final_accuracy()
            );
        }
        ModelKind::Tree => {
            let params = tree_params(&a.fit)?;
            let fitted = TreeLearner { params }.fit(&train_ds)?;
            let pred = TreeLearner::predict(&fitted, &train_ds)?;
            let cm = ConfusionMatrix::from_predictions(ds.class_names.clone(), &train_ds.labels, &pred)?;
            run.write(TREE_FILE, fitted.to_json()?)?;
            println!(
                "trained tree: depth {}, {} leaves, train accuracy {:.4}",
                fitted.depth(),
                fitted.n_leaves(),
                cm.accuracy()
            );
            tree = Some(params);
        }
    }
    run.write_json(SPLIT_FILE, &split)?;
    run.write_json(STATS_FILE, &stats)?;
    let info = TrainingInfo {
        model: model_kind,
        dataset: ds.name.clone(),
        dataset_hash: hash.clone(),
        window_length: ds.window_length(),
        n_channels: ds.n_channels(),
        class_names: ds.class_names.clone(),
        train: a.fit.train_config(),
        tree,
    };
    run.write_json(TRAINING_FILE, &info)?;
    run.finish(a, vec![a.fit.seed, a.split_seed], Some(hash))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("corrupt {}: {e}", path.display())))
}

/// `metric,value` rows: overall accuracy, then precision and recall per class.
fn metrics_csv(split: SplitArg, cm: &ConfusionMatrix) -> String {
    let split = match split {
        SplitArg::Train => "train",
        SplitArg::Test => "test",
        SplitArg::All => "all",
    };
    let fmt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.6}"));
    let mut out = String::from("metric,value\n");
    let _ = writeln!(out, "split,{split}");
    let _ = writeln!(out, "n_samples,{}", cm.total());
    let _ = writeln!(out, "accuracy,{:.6}", cm.accuracy());
    for (k, name) in cm.class_names.iter().enumerate() {
        let _ = writeln!(out, "precision_{name},{}", fmt(cm.precision(k)));
        let _ = writeln!(out, "recall_{name},{}", fmt(cm.recall(k)));
    }
    out
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let info: TrainingInfo = read_json(&a.ckpt.join(TRAINING_FILE))?;
    let ds = load_dataset(&a.data)?;
    if ds.n_channels() != info.n_channels || ds.window_length() != info.window_length {
        return Err(Error::Shape(format!(
            "checkpoint expects T={} S={} but {} has T={} S={}",
            info.window_length,
            info.n_channels,
            a.data.display(),
            ds.window_length(),
            ds.n_channels()
        )));
    }
    if ds.class_names != info.class_names {
        return Err(Error::Validation(format!(
            "checkpoint classes {:?} differ from dataset classes {:?}",
            info.class_names, ds.class_names
        )));
    }
    let split: Fold = read_json(&a.ckpt.join(SPLIT_FILE))?;
    let stats: ChannelStats = read_json(&a.ckpt.join(STATS_FILE))?;
    let indices = match a.split {
        SplitArg::All => all_indices(&ds),
        side => {
            split
                .validate(&ds)
                .map_err(|e| Error::Validation(format!("saved split does not fit this dataset ({e})")))?;
            if side == SplitArg::Train {
                split.train.clone()
            } else {
                split.test.clone()
            }
        }
    };
    let hash = dataset_hash(&a.data)?;
    let mut run = RunDir::create("eval", &a.out, &[&a.data, &a.ckpt])?;
    let x = stats.apply(&ds.subset(&indices)?)?;
    let pred = match info.model {
        ModelKind::Transformer => predict_dataset(&load_checkpoint(&a.ckpt)?, &x)?,
        ModelKind::Tree => {
            let text = fs::read_to_string(a.ckpt.join(TREE_FILE))
                .map_err(|e| Error::Format(format!("cannot read {}: {e}", a.ckpt.join(TREE_FILE).display())))?;
            TreeLearner::predict(&DecisionTree::from_json(&text)?, &x)?
        }
    };
    let cm = ConfusionMatrix::from_predictions(ds.class_names.clone(), &x.labels, &pred)?;
    run.write("metrics.csv", metrics_csv(a.split, &cm))?;
    run.write("confusion.csv", cm.to_csv())?;
    run.write("confusion.txt", cm.render_text())?;
    println!("{} accuracy {:.4} on {} samples", info.model, cm.accuracy(), cm.total());
    run.finish(a, vec![info.train.seed], Some(hash))
}

pub fn crossval(a: &CrossvalArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let learner = learner(&a.fit, &ds)?;
    let folds = make_loto_folds(&ds)?;
    let hash = dataset_hash(&a.data)?;
    let mut run = RunDir::create("crossval", &a.out, &[&a.data])?;
    let result = run_crossval(learner.as_ref(), &ds, &folds, a.fit.seed, StatsSource::TrainOnly)?;
    run.write("folds.csv", result.to_csv())?;
    let summary = format!(
        "metric,value\nfolds,{}\nmean_accuracy,{:.6}\nstd_accuracy,{:.6}\npooled_accuracy,{:.6}\n",
        result.folds.len(),
        result.mean_accuracy,
        result.std_accuracy,
        result.pooled_accuracy
    );
    run.write("summary.csv", &summary)?;
    run.write("confusion_pooled.csv", result.pooled.to_csv())?;
    run.write("confusion_pooled.txt", result.pooled.render_text())?;
    println!(
        "{} folds: mean accuracy {:.4} ± {:.4}, pooled {:.4}",
        result.folds.len(),
        result.mean_accuracy,
        result.std_accuracy,
        result.pooled_accuracy
    );
    run.finish(a, vec![a.fit.seed], Some(hash))
}

pub fn ablate(a: &AblateArgs, jobs: Option<usize>) -> Result<()> {
    check_fraction("--test-fraction", a.test_fraction)?;
    if a.seeds == 0 {
        return Err(Error::Usage("--seeds must be at least 1".into()));
    }
    let ds = load_dataset(&a.data)?;
    let learner = learner(&a.fit, &ds)?;
    let seeds: Vec<u64> = (a.fit.seed..a.fit.seed + a.seeds).collect();
    let cfg = AblationConfig {
        k_values: a.k.clone(),
        train_fractions: a.fractions.clone(),
        seeds: seeds.clone(),
        test_fraction: a.test_fraction,
        split_seed: a.split_seed,
        jobs,
    };
    let hash = dataset_hash(&a.data)?;
    let mut run = RunDir::create("ablate", &a.out, &[&a.data])?;
    let result = ablation_sweep(&ds, &cfg, learner.as_ref())?;
    run.write("ablation_rows.csv", result.rows_csv())?;
    run.write("ablation_aggregate.csv", result.aggregate_csv())?;
    run.write(
        "ablation.svg",
        render_svg(&result, &format!("{} ({})", ds.name, learner.kind())),
    )?;
    run.write_json(SPLIT_FILE, &result.split)?;
    print!("{}", result.aggregate_csv());
    run.finish(a, seeds, Some(hash))
}

pub fn attribute(a: &AttributeArgs, jobs: Option<usize>) -> Result<()> {
    check_fraction("--test-fraction", a.test_fraction)?;
    let ds = load_dataset(&a.data)?;
    let learner = learner(&a.fit, &ds)?;
    let hash = dataset_hash(&a.data)?;
    let mut run = RunDir::create("attribute", &a.out, &[&a.data])?;
    let maps = finger_attribution(&ds, learner.as_ref(), a.test_fraction, a.split_seed, a.fit.seed, jobs)?;
    let text = render_side_by_side(&maps);
    run.write("attribution.csv", attribution_csv(&maps))?;
    run.write("attribution.txt", &text)?;
    print!("{text}");
    run.finish(a, vec![a.fit.seed, a.split_seed], Some(hash))
}

/// Small text artifacts are shown in full; everything else is listed.
const INLINE_LIMIT: usize = 4096;

pub fn report(a: &ReportArgs) -> Result<()> {
    let m = read_manifest(&a.run)?;
    let mut out = String::new();
    let _ = writeln!(out, "run        {}", a.run.display());
    let _ = writeln!(out, "command    {}", m.command);
    let _ = writeln!(out, "version    {}", m.git_describe);
    let _ = writeln!(out, "wall clock {:.2} s", m.wall_clock_seconds);
    let seeds: Vec<String> = m.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "seeds      {}", seeds.join(", "));
    if let Some(h) = &m.dataset_hash {
        let _ = writeln!(out, "dataset    {h}");
    }
    if let Some(flags) = m.flags.as_object() {
        let _ = writeln!(out, "flags");
        for (k, v) in flags {
            let _ = writeln!(out, "  {k} = {v}");
        }
    }
    let _ = writeln!(out, "artifacts");
    for name in &m.artifacts {
        let path = a.run.join(name);
        let meta =
            fs::metadata(&path).map_err(|e| Error::Format(format!("artifact {} is missing: {e}", path.display())))?;
        let _ = writeln!(out, "  {name} ({} bytes)", meta.len());
    }
    for name in &m.artifacts {
        let inline = (name.ends_with(".csv") || name.ends_with(".txt")) && !name.starts_with("ablation_rows");
        let path = a.run.join(name);
        if inline && fs::metadata(&path)?.len() as usize <= INLINE_LIMIT {
            let _ = writeln!(out, "\n== {name}");
            out.push_str(&fs::read_to_string(&path)?);
        }
    }
    print!("{out}");
    Ok(())
}
