use ids_core::mlp::{
    forward, gradients, init, loss, train, MlpError, Optimizer, TrainConfig,
};
use ids_core::preprocess::{ClassWeights, EncodedDataset, Scaling};
use ndarray::{concatenate, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two clusters on either side of the line x0 + x1 = 1 with a 0.2 margin.
fn separable(n: usize, seed: u64) -> EncodedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::<f32>::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let (a, b): (f32, f32) = (rng.random(), rng.random());
        let s = a + b - 1.0;
        if s.abs() < 0.2 {
            continue;
        }
        x[[i, 0]] = a;
        x[[i, 1]] = b;
        y.push(u16::from(s > 0.0));
        i += 1;
    }
    EncodedDataset {
        x,
        y,
        class_names: vec!["below".into(), "above".into()],
        scaling: Scaling::default(),
    }
}

fn toy_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 20,
        batch_size: 16,
        learning_rate: 1e-2,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_toy_set_is_learned() {
    let train_ds = separable(200, 1);
    let val_ds = separable(200, 2);
    let model = init(&[2, 8, 2], 3).unwrap();
    let (_, hist) = train(model, &train_ds, &val_ds, &toy_config(4)).unwrap();
    assert_eq!(hist.epochs.len(), 20);
    assert_eq!(hist.last().unwrap().val_accuracy, 1.0);
    assert!(hist.epochs[19].train_loss < hist.epochs[0].train_loss);
}

#[test]
fn unit_weights_match_unweighted_training() {
    let ds = separable(200, 5);
    let model = init(&[2, 6, 2], 6).unwrap();
    let plain = train(model.clone(), &ds, &ds, &toy_config(7)).unwrap();
    let ones = TrainConfig {
        class_weights: Some(ClassWeights::uniform(2)),
        ..toy_config(7)
    };
    let weighted = train(model, &ds, &ds, &ones).unwrap();
    assert_eq!(plain.1, weighted.1);
    assert_eq!(plain.0.weights, weighted.0.weights);
}

#[test]
fn training_is_deterministic_per_seed() {
    let ds = separable(120, 8);
    let model = init(&[2, 5, 4, 2], 9).unwrap();
    let cfg = TrainConfig { epochs: 3, batch_size: 7, ..TrainConfig::default() };
    let a = train(model.clone(), &ds, &ds, &cfg).unwrap();
    let b = train(model.clone(), &ds, &ds, &cfg).unwrap();
    assert_eq!(a.0.weights, b.0.weights);
    assert_eq!(a.0.biases, b.0.biases);
    assert_eq!(a.1, b.1);
    let c = train(model, &ds, &ds, &TrainConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a.0.weights, c.0.weights);
}

#[test]
fn one_small_step_lowers_convex_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let model = init(&[4, 3], 10).unwrap();
    let x = Array2::from_shape_simple_fn((12, 4), || rng.random_range(-1.0..1.0));
    let y: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let before = loss(&forward(&model, x.view()).unwrap(), &y, None).unwrap();
    let g = gradients(&model, x.view(), &y, None).unwrap();
    let mut stepped = model.clone();
    stepped.weights[0].scaled_add(-1e-3, &g.weights[0]);
    stepped.biases[0].scaled_add(-1e-3, &g.biases[0]);
    let after = loss(&forward(&stepped, x.view()).unwrap(), &y, None).unwrap();
    assert!(after < before, "{after} >= {before}");

    // the same step through the trainer's SGD path
    let ds = EncodedDataset {
        x: x.mapv(|v| v as f32),
        y: y.iter().map(|&c| c as u16).collect(),
        class_names: vec!["a".into(), "b".into(), "c".into()],
        scaling: Scaling::default(),
    };
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 12,
        learning_rate: 1e-3,
        optimizer: Optimizer::Sgd,
        ..TrainConfig::default()
    };
    let (_, hist) = train(model, &ds, &ds, &cfg).unwrap();
    let rec = hist.last().unwrap();
    assert!((rec.train_loss - before).abs() < 1e-6);
    assert!(rec.val_loss < rec.train_loss);
}

#[test]
fn zero_epochs_is_rejected() {
    let ds = separable(20, 0);
    let model = init(&[2, 2], 0).unwrap();
    let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
    assert!(matches!(
        train(model, &ds, &ds, &cfg),
        Err(MlpError::InvalidConfig { field: "epochs", .. })
    ));
}

#[test]
fn duplicated_rows_leave_gradient_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let model = init(&[3, 4, 2], 12).unwrap();
    let x = Array2::from_shape_simple_fn((5, 3), || rng.random_range(-1.0..1.0));
    let y = vec![0, 1, 1, 0, 1];
    let xx = concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
    let yy: Vec<usize> = y.iter().chain(&y).copied().collect();
    let w = ClassWeights(vec![0.4, 1.6]);
    let g1 = gradients(&model, x.view(), &y, Some(&w)).unwrap();
    let g2 = gradients(&model, xx.view(), &yy, Some(&w)).unwrap();
    for (a, b) in g1.weights.iter().zip(&g2.weights) {
        assert!(a.iter().zip(b).all(|(p, q)| (p - q).abs() < 1e-12));
    }
    assert!((g1.loss - g2.loss).abs() < 1e-12);
}

#[test]
fn weighted_loss_of_uniform_probs_is_log_k() {
    let p = Array2::from_elem((6, 4), 0.25);
    let y = [0, 1, 2, 3, 3, 3];
    let w = ClassWeights(vec![0.1, 5.0, 2.0, 0.7]);
    assert!((loss(&p, &y, Some(&w)).unwrap() - 4f64.ln()).abs() < 1e-10);
}
