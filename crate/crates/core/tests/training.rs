use glovenet_core::dataset::{
    generate_synthetic, make_loto_folds, ChannelStats, Fold, FoldSpec, GestureDataset, SensorSpec, Vocabulary,
};
use glovenet_core::model::{ModelConfig, TransformerClassifier};
use glovenet_core::train::{
    crossval, evaluate, train, ConfusionMatrix, Learner, StatsSource, TrainConfig, TransformerLearner, TreeLearner,
};
use glovenet_core::Error;
use glovenet_tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_template() -> ModelConfig {
    ModelConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        d_ff: 16,
        ..ModelConfig::new(1, 1, 2)
    }
}

/// Two classes separated by the sign of channel 0.
fn separable(n: usize) -> GestureDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (t, s) = (4, 2);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut data = Vec::new();
    for &l in &labels {
        let sign = if l == 0 { 1.0 } else { -1.0 };
        for _ in 0..t {
            data.push(sign + rng.random_range(-0.3f32..0.3));
            data.push(rng.random_range(-1.0f32..1.0));
        }
    }
    GestureDataset {
        name: "separable".into(),
        samples: Tensor::new(vec![n, t, s], data).unwrap(),
        labels,
        trial_ids: (0..n as u32).map(|i| i / 8).collect(),
        subject_ids: vec![0; n],
        class_names: vec!["null".into(), "g".into()],
        sensor_layout: vec![SensorSpec::new("a", s)],
        sample_rate_hz: 50.0,
    }
}

#[test]
fn separable_toy_reaches_full_training_accuracy() {
    let ds = separable(64);
    let mut m = TransformerClassifier::<f32>::new(ModelConfig::new(4, 2, 2), 0).unwrap();
    let log = train(
        &mut m,
        &ds,
        &TrainConfig {
            epochs: 20,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((log.initial_loss - 2f64.ln()).abs() < 1e-6, "{}", log.initial_loss);
    assert_eq!(log.epochs.len(), 20);
    assert!(log.epochs.iter().all(|e| e.loss.is_finite()));
    let (acc, cm) = evaluate(&m, &ds).unwrap();
    assert_eq!(acc, 1.0);
    assert_eq!(cm.total(), 64);
}

#[test]
fn initial_loss_is_log_c() {
    let ds = generate_synthetic(Vocabulary::Multi, 33, 8, 0).unwrap();
    let mut m = TransformerClassifier::<f32>::new(
        ModelConfig {
            window_length: 8,
            n_channels: 30,
            n_classes: 11,
            ..tiny_template()
        },
        0,
    )
    .unwrap();
    let log = train(
        &mut m,
        &ds,
        &TrainConfig {
            epochs: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((log.initial_loss - 11f64.ln()).abs() < 1e-5);
}

#[test]
fn same_seed_same_log_and_weights() {
    let ds = generate_synthetic(Vocabulary::Single, 45, 8, 2).unwrap();
    let cfg = ModelConfig {
        window_length: 8,
        n_channels: 30,
        n_classes: 9,
        ..tiny_template()
    };
    let tc = TrainConfig {
        epochs: 3,
        batch_size: 8,
        seed: 5,
        ..Default::default()
    };
    let run = || {
        let mut m = TransformerClassifier::<f32>::new(cfg.clone(), 1).unwrap();
        let log = train(&mut m, &ds, &tc).unwrap();
        (log, m)
    };
    let (la, ma) = run();
    let (lb, mb) = run();
    assert_eq!(la, lb);
    assert_eq!(la.to_csv(), lb.to_csv());
    assert_eq!(ma, mb);
}

#[test]
fn training_errors() {
    let ds = separable(8);
    let mut m = TransformerClassifier::<f32>::new(ModelConfig::new(4, 2, 2), 0).unwrap();
    let bad = TrainConfig {
        epochs: 0,
        ..Default::default()
    };
    assert!(matches!(train(&mut m, &ds, &bad), Err(Error::Usage(_))));
    let mut wrong = TransformerClassifier::<f32>::new(ModelConfig::new(4, 3, 2), 0).unwrap();
    assert!(matches!(
        train(&mut wrong, &ds, &TrainConfig::default()),
        Err(Error::Shape(_))
    ));
    let mut poisoned = ds.clone();
    poisoned.samples.data_mut()[3] = f32::NAN;
    assert!(matches!(
        train(&mut m, &poisoned, &TrainConfig::default()),
        Err(Error::NonFinite(_))
    ));
}

#[test]
fn crossval_reports_every_fold() {
    let ds = generate_synthetic(Vocabulary::Single, 60, 8, 1).unwrap();
    let folds = make_loto_folds(&ds).unwrap();
    assert_eq!(folds.len(), 3);
    let r = crossval(&TreeLearner::default(), &ds, &folds, 0, StatsSource::TrainOnly).unwrap();
    assert_eq!(r.folds.len(), 3);
    let mean = r.folds.iter().map(|f| f.accuracy).sum::<f64>() / 3.0;
    assert!((r.mean_accuracy - mean).abs() < 1e-15);
    assert_eq!(r.pooled.total(), 60);
    assert_eq!(r.to_csv().lines().count(), 4);
    for (fold, res) in folds.folds.iter().zip(&r.folds) {
        // statistics come from the training side of that fold only
        let train = ds.subset(&fold.train).unwrap();
        let fitted = ChannelStats::fit(&train, &(0..train.n_samples()).collect::<Vec<_>>()).unwrap();
        assert_eq!(res.stats, fitted);
        assert_eq!(res.confusion.total() as usize, fold.test.len());
    }
}

#[test]
fn fold_order_does_not_change_fold_metrics() {
    let ds = generate_synthetic(Vocabulary::Single, 54, 8, 3).unwrap();
    let learner = TransformerLearner {
        template: tiny_template(),
        train: TrainConfig {
            epochs: 2,
            batch_size: 8,
            ..Default::default()
        },
    };
    let folds = make_loto_folds(&ds).unwrap();
    let reversed = FoldSpec {
        folds: folds.folds.iter().rev().cloned().collect(),
    };
    let a = crossval(&learner, &ds, &folds, 7, StatsSource::TrainOnly).unwrap();
    let b = crossval(&learner, &ds, &reversed, 7, StatsSource::TrainOnly).unwrap();
    for fa in &a.folds {
        let fb = b.folds.iter().find(|f| f.test_trials == fa.test_trials).unwrap();
        assert_eq!(fa.confusion, fb.confusion);
    }
}

#[test]
fn leaking_test_statistics_is_observable() {
    let mut ds = generate_synthetic(Vocabulary::Single, 200, 16, 8).unwrap();
    // one recording session drifted far away from all the others
    let shifted = *ds.distinct_trials().last().unwrap();
    let per_sample = ds.window_length() * ds.n_channels();
    for i in ds.indices_of_trials(&[shifted]) {
        for v in &mut ds.samples.data_mut()[i * per_sample..(i + 1) * per_sample] {
            *v += 6.0;
        }
    }
    let spec = FoldSpec {
        folds: vec![Fold::from_test_trials(&ds, &[shifted])],
    };
    let honest = crossval(&TreeLearner::default(), &ds, &spec, 0, StatsSource::TrainOnly).unwrap();
    let leaky = crossval(&TreeLearner::default(), &ds, &spec, 0, StatsSource::LeakTestStatistics).unwrap();
    println!("honest {:.3} leaky {:.3}", honest.mean_accuracy, leaky.mean_accuracy);
    assert!(leaky.mean_accuracy - honest.mean_accuracy >= 0.3);
    // the default pipeline is the honest one
    let default = crossval(&TreeLearner::default(), &ds, &spec, 0, StatsSource::default()).unwrap();
    assert_eq!(default.mean_accuracy, honest.mean_accuracy);
}

#[test]
fn learners_predict_every_test_sample() {
    let ds = generate_synthetic(Vocabulary::Single, 36, 8, 4).unwrap();
    let (train_ds, test_ds) = (
        ds.subset(&(0..27).collect::<Vec<_>>()).unwrap(),
        ds.subset(&[27, 28, 29]).unwrap(),
    );
    let tree = TreeLearner::default();
    assert_eq!(tree.fit_predict(&train_ds, &test_ds, 0).unwrap().len(), 3);
    let tf = TransformerLearner {
        template: tiny_template(),
        train: TrainConfig {
            epochs: 1,
            ..Default::default()
        },
    };
    assert_eq!(tf.fit_predict(&train_ds, &test_ds, 0).unwrap().len(), 3);
    let cm = ConfusionMatrix::from_predictions(ds.class_names.clone(), &test_ds.labels, &[0, 0, 0]).unwrap();
    assert_eq!(cm.total(), 3);
}
