//! WebAssembly bindings for the demo page in `www/`. Every export returns a
//! JSON string; errors come back as `{"error": "..."}`.

use ids_core::metrics::{confusion, report};
use ids_core::mlp::{self, init, train, TrainConfig};
use ids_core::preprocess::{class_weights, EncodedDataset, Scaling};
use ids_core::shap::{self, exact_shapley, kernel_shap, Background};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const GRID: usize = 48;
const MAX_EXACT_FEATURES: usize = 12;

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[derive(Serialize)]
struct SizeWeight {
    size: usize,
    coalitions: f64,
    weight: f64,
    /// Share of the total kernel mass carried by all coalitions of this size.
    mass_share: f64,
}

/// Shapley kernel weight and per-size mass for `m` features.
#[wasm_bindgen]
pub fn kernel_curve(m: usize) -> String {
    to_json((|| {
        let rows: Vec<(usize, f64, f64)> = (1..m)
            .map(|s| {
                let w = shap::kernel_weight(m, s).map_err(|e| e.to_string())?;
                let count = (1..=s).fold(1.0, |c, i| c * (m - s + i) as f64 / i as f64);
                Ok((s, count, w))
            })
            .collect::<Result<_, String>>()?;
        if rows.is_empty() {
            return Err("need at least two features".into());
        }
        let total: f64 = rows.iter().map(|(_, c, w)| c * w).sum();
        Ok(rows
            .into_iter()
            .map(|(size, coalitions, weight)| SizeWeight {
                size,
                coalitions,
                weight,
                mass_share: coalitions * weight / total,
            })
            .collect::<Vec<_>>())
    })())
}

/// Three Gaussian blobs in the unit square; class 2 is the rare one.
fn blobs(n: usize, rare_fraction: f64, seed: u64) -> EncodedDataset {
    const CENTERS: [(f32, f32); 3] = [(0.3, 0.35), (0.7, 0.4), (0.5, 0.72)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rare = ((n as f64 * rare_fraction).round() as usize).max(2);
    let n_common = (n - n_rare.min(n)) / 2;
    let sizes = [n_common, n - n_common - n_rare, n_rare];
    let mut x = Array2::<f32>::zeros((sizes.iter().sum(), 2));
    let mut y = Vec::new();
    let gauss = |rng: &mut ChaCha8Rng| -> f32 {
        // Box-Muller
        let u1: f32 = rng.random_range(1e-7..1.0);
        let u2: f32 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f32::consts::TAU * u2).cos()
    };
    let mut row = 0;
    for (class, &count) in sizes.iter().enumerate() {
        for _ in 0..count {
            let (cx, cy) = CENTERS[class];
            x[[row, 0]] = (cx + 0.12 * gauss(&mut rng)).clamp(0.0, 1.0);
            x[[row, 1]] = (cy + 0.12 * gauss(&mut rng)).clamp(0.0, 1.0);
            y.push(class as u16);
            row += 1;
        }
    }
    EncodedDataset {
        x,
        y,
        class_names: vec!["A".into(), "B".into(), "rare".into()],
        scaling: Scaling::default(),
    }
}

#[derive(Serialize)]
struct TrainedView {
    train_loss: Vec<f64>,
    val_loss: Vec<f64>,
    val_accuracy: Vec<f64>,
    recall: Vec<f64>,
    macro_recall: f64,
    /// Predicted class on a `grid x grid` lattice over the unit square, row-major from y = 0.
    regions: Vec<u8>,
}

#[derive(Serialize)]
struct WeightingDemo {
    grid: usize,
    class_names: Vec<String>,
    class_weights: Vec<f64>,
    points: Vec<(f32, f32, u16)>,
    unweighted: TrainedView,
    weighted: TrainedView,
}

fn fit_view(
    train_ds: &EncodedDataset,
    val_ds: &EncodedDataset,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainedView, String> {
    let model = init(&[2, 16, 3], seed).map_err(|e| e.to_string())?;
    let (model, hist) = train(model, train_ds, val_ds, cfg).map_err(|e| e.to_string())?;
    let pred = mlp::predict_dataset(&model, val_ds).map_err(|e| e.to_string())?;
    let truth: Vec<usize> = val_ds.y.iter().map(|&c| c as usize).collect();
    let r = report(&confusion(&truth, &pred, &val_ds.class_names).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let lattice = Array2::from_shape_fn((GRID * GRID, 2), |(i, j)| {
        let (gx, gy) = (i % GRID, i / GRID);
        (if j == 0 { gx } else { gy } as f64 + 0.5) / GRID as f64
    });
    let regions = mlp::predict(&model, lattice.view())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|c| c as u8)
        .collect();
    Ok(TrainedView {
        train_loss: hist.epochs.iter().map(|e| e.train_loss).collect(),
        val_loss: hist.epochs.iter().map(|e| e.val_loss).collect(),
        val_accuracy: hist.epochs.iter().map(|e| e.val_accuracy).collect(),
        recall: r.classes.iter().map(|c| c.recall).collect(),
        macro_recall: r.macro_avg.recall,
        regions,
    })
}

/// Trains the same small network with and without balanced class weights
/// on an imbalanced three-class toy set.
#[wasm_bindgen]
pub fn weighting_demo(rare_fraction: f64, epochs: usize, seed: u64) -> String {
    to_json((|| {
        if !(0.0..0.5).contains(&rare_fraction) {
            return Err("rare_fraction must lie in [0, 0.5)".into());
        }
        let train_ds = blobs(1200, rare_fraction, seed);
        let val_ds = blobs(600, rare_fraction, seed.wrapping_add(1));
        let cfg = TrainConfig {
            epochs,
            batch_size: 32,
            learning_rate: 1e-2,
            seed,
            ..TrainConfig::default()
        };
        let weights = class_weights(&train_ds.y, 3).map_err(|e| e.to_string())?;
        let unweighted = fit_view(&train_ds, &val_ds, &cfg, seed)?;
        let weighted_cfg = TrainConfig {
            class_weights: Some(weights.clone()),
            ..cfg
        };
        let weighted = fit_view(&train_ds, &val_ds, &weighted_cfg, seed)?;
        Ok(WeightingDemo {
            grid: GRID,
            class_names: train_ds.class_names.clone(),
            class_weights: weights.0,
            points: train_ds
                .x
                .rows()
                .into_iter()
                .zip(&train_ds.y)
                .map(|(r, &c)| (r[0], r[1], c))
                .collect(),
            unweighted,
            weighted,
        })
    })())
}

#[derive(Serialize)]
struct ShapComparison {
    features: usize,
    budget: usize,
    enumerated: bool,
    kernel: Vec<f64>,
    exact: Vec<f64>,
    max_abs_diff: f64,
    efficiency_residual: f64,
}

/// KernelSHAP with `budget` coalitions against exact Shapley values for a
/// random network with `m` inputs (class 0 attributions of one row).
#[wasm_bindgen]
pub fn shap_vs_exact(m: usize, budget: usize, seed: u64) -> String {
    to_json((|| {
        if !(2..=MAX_EXACT_FEATURES).contains(&m) {
            return Err(format!("m must lie in 2..={MAX_EXACT_FEATURES}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = init(&[m, 8, 3], seed).map_err(|e| e.to_string())?;
        let bg = Background::new(Array2::from_shape_simple_fn((16, m), || rng.random_range(0.0..1.0)))
            .map_err(|e| e.to_string())?;
        let x = Array2::from_shape_simple_fn((1, m), || rng.random_range(0.0..1.0));
        let e = kernel_shap(&model, x.view(), &bg, budget, seed).map_err(|e| e.to_string())?;
        let exact = exact_shapley(&model, x.row(0), &bg).map_err(|e| e.to_string())?;
        let kernel = e.phi[0].row(0).to_vec();
        let exact: Vec<f64> = exact.row(0).to_vec();
        let max_abs_diff = kernel
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(ShapComparison {
            features: m,
            budget,
            enumerated: budget >= (1usize << m) - 2,
            kernel,
            exact,
            max_abs_diff,
            efficiency_residual: e.efficiency_residuals()[0],
        })
    })())
}
