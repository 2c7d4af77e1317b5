//! Dense feed-forward classifier: rectifier hidden layers, softmax output,
//! class-weighted cross-entropy, analytic backpropagation and Adam/SGD.
//!
//! Parameters and all arithmetic are `f64`; datasets are stored as `f32` and
//! widened one minibatch at a time.

use std::fs;
use std::path::Path;

use log::info;
use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{ClassWeights, EncodedDataset};

/// Added to probabilities before taking the log in the loss.
pub const LOG_FLOOR: f64 = 1e-12;

/// Hidden widths of the 23-class base network.
pub const BASE_HIDDEN: [usize; 2] = [256, 112];
/// Hidden widths of the 4-class truncated network.
pub const TRUNCATED_HIDDEN: [usize; 1] = [112];
/// Full base dims for the 122-column encoding: 62,871 parameters.
pub const BASE_DIMS: [usize; 4] = [122, 256, 112, 23];
/// Full truncated dims for a 119-column encoding: 13,892 parameters.
pub const TRUNCATED_DIMS: [usize; 3] = [119, 112, 4];

const EVAL_CHUNK: usize = 8192;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("invalid layer dims {0:?}: need at least two layers, all widths >= 1")]
    BadDims(Vec<usize>),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid training config: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt model file: {reason}")]
    CorruptModel { reason: String },
    #[error("unsupported model format version {found}")]
    VersionMismatch { found: u32 },
}

pub type Result<T> = std::result::Result<T, MlpError>;

fn mismatch(expected: impl ToString, found: impl ToString) -> MlpError {
    MlpError::ShapeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Layer `i` maps `dims[i]` inputs to `dims[i + 1]` outputs through
/// `weights[i]` (fan-in x fan-out) and `biases[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub hidden_activation: Activation,
    /// One name per output unit.
    pub class_names: Vec<String>,
}

/// Parameter count of a network with the given layer widths.
pub fn count_parameters(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(MlpError::BadDims(dims.to_vec()));
    }
    Ok(())
}

/// Glorot-uniform weights, zero biases.
pub fn init(dims: &[usize], seed: u64) -> Result<MlpModel> {
    check_dims(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(Array2::from_shape_simple_fn((fan_in, fan_out), || {
            rng.random_range(-a..a)
        }));
        biases.push(Array1::zeros(fan_out));
    }
    let k = dims[dims.len() - 1];
    Ok(MlpModel {
        dims: dims.to_vec(),
        weights,
        biases,
        hidden_activation: Activation::Relu,
        class_names: (0..k).map(|c| c.to_string()).collect(),
    })
}

impl MlpModel {
    pub fn input_width(&self) -> usize {
        self.dims[0]
    }

    pub fn num_classes(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        count_parameters(&self.dims)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes() {
            return Err(mismatch(
                format!("{} class names", self.num_classes()),
                names.len(),
            ));
        }
        self.class_names = names;
        Ok(self)
    }

    /// Checks that every matrix agrees with `dims`.
    pub fn validate(&self) -> Result<()> {
        check_dims(&self.dims)?;
        let layers = self.dims.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(mismatch(format!("{layers} layers"), self.weights.len()));
        }
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let want = (self.dims[i], self.dims[i + 1]);
            if w.dim() != want || b.len() != want.1 {
                return Err(mismatch(
                    format!("layer {i} {want:?}"),
                    format!("{:?} / {}", w.dim(), b.len()),
                ));
            }
        }
        if self.class_names.len() != self.num_classes() {
            return Err(mismatch(self.num_classes(), self.class_names.len()));
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(mismatch(
                format!("{} input columns", self.input_width()),
                x.ncols(),
            ));
        }
        Ok(())
    }

    /// Layer inputs (`acts[0] = x`, then each hidden activation) and output logits.
    fn trace(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let last = self.num_layers() - 1;
        let mut acts = Vec::with_capacity(self.num_layers());
        let mut current = x.to_owned();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = current.dot(w);
            z += b;
            acts.push(current);
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            current = z;
        }
        (acts, current)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Class probabilities for each row of `x`.
pub fn forward(model: &MlpModel, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    model.check_input(&x)?;
    let (_, mut logits) = model.trace(x);
    softmax_rows(&mut logits);
    Ok(logits)
}

fn check_labels(y: &[usize], rows: usize, classes: usize) -> Result<()> {
    if y.len() != rows {
        return Err(mismatch(format!("{rows} labels"), y.len()));
    }
    if let Some(&label) = y.iter().find(|&&c| c >= classes) {
        return Err(MlpError::LabelOutOfRange { label, classes });
    }
    Ok(())
}

fn sample_weights(y: &[usize], weights: Option<&ClassWeights>, classes: usize) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0; y.len()]),
        Some(w) if w.len() == classes => Ok(y.iter().map(|&c| w.get(c)).collect()),
        Some(w) => Err(mismatch(format!("{classes} class weights"), w.len())),
    }
}

/// Class-weighted mean negative log-likelihood, normalized by the total
/// weight of the batch.
pub fn loss(probs: &Array2<f64>, y: &[usize], weights: Option<&ClassWeights>) -> Result<f64> {
    check_labels(y, probs.nrows(), probs.ncols())?;
    if y.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let w = sample_weights(y, weights, probs.ncols())?;
    let (num, den) = weighted_nll(probs, y, &w);
    Ok(num / den)
}

fn weighted_nll(probs: &Array2<f64>, y: &[usize], w: &[f64]) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((row, &c), &wb) in probs.rows().into_iter().zip(y).zip(w) {
        num -= wb * (row[c] + LOG_FLOOR).ln();
        den += wb;
    }
    (num, den)
}

/// Gradients of `loss` with respect to every weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    /// Loss at the evaluated point.
    pub loss: f64,
}

pub fn gradients(
    model: &MlpModel,
    x: ArrayView2<f64>,
    y: &[usize],
    weights: Option<&ClassWeights>,
) -> Result<Gradients> {
    model.check_input(&x)?;
    check_labels(y, x.nrows(), model.num_classes())?;
    if y.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let w = sample_weights(y, weights, model.num_classes())?;
    let (acts, mut delta) = model.trace(x);
    softmax_rows(&mut delta);
    let (num, total) = weighted_nll(&delta, y, &w);

    // Output delta: (p - onehot(y)) * w_b / sum(w)
    for ((mut row, &c), &wb) in delta.rows_mut().into_iter().zip(y).zip(&w) {
        row[c] -= 1.0;
        row *= wb / total;
    }

    let layers = model.num_layers();
    let mut gw = Vec::with_capacity(layers);
    let mut gb = Vec::with_capacity(layers);
    for l in (0..layers).rev() {
        gw.push(acts[l].t().dot(&delta));
        gb.push(delta.sum_axis(Axis(0)));
        if l > 0 {
            let mut back = delta.dot(&model.weights[l].t());
            Zip::from(&mut back).and(&acts[l]).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
    }
    gw.reverse();
    gb.reverse();
    Ok(Gradients {
        weights: gw,
        biases: gb,
        loss: num / total,
    })
}

/// Argmax per row; ties go to the lowest class index.
pub fn argmax_rows(probs: &Array2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

pub fn predict(model: &MlpModel, x: ArrayView2<f64>) -> Result<Vec<usize>> {
    Ok(argmax_rows(&forward(model, x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub class_weights: Option<ClassWeights>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 1024,
            learning_rate: 1e-3,
            optimizer: Optimizer::default(),
            seed: 0,
            class_weights: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(MlpError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if self.epochs < 1 {
            return bad("epochs", "must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size", "must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be a positive number");
        }
        if let Optimizer::Adam {
            beta1,
            beta2,
            epsilon,
        } = self.optimizer
        {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || epsilon <= 0.0 {
                return bad("optimizer", "adam needs 0 <= beta < 1 and epsilon > 0");
            }
        }
        if let Some(w) = &self.class_weights {
            if w.as_slice().iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad("class_weights", "must all be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    /// `epoch,train_loss,val_loss,val_accuracy` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_accuracy\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.epoch, e.train_loss, e.val_loss, e.val_accuracy
            ));
        }
        out
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    step: i32,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl OptimizerState {
    fn new(model: &MlpModel, kind: Optimizer, lr: f64) -> Self {
        let zw = || model.weights.iter().map(|w| Array2::zeros(w.dim())).collect();
        let zb = || model.biases.iter().map(|b| Array1::zeros(b.len())).collect();
        Self {
            kind,
            lr,
            step: 0,
            m_w: zw(),
            v_w: zw(),
            m_b: zb(),
            v_b: zb(),
        }
    }

    fn apply(&mut self, model: &mut MlpModel, g: &Gradients) {
        self.step += 1;
        match self.kind {
            Optimizer::Sgd => {
                for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
                    w.scaled_add(-self.lr, gw);
                }
                for (b, gb) in model.biases.iter_mut().zip(&g.biases) {
                    b.scaled_add(-self.lr, gb);
                }
            }
            Optimizer::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                let lr = self.lr;
                let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                };
                for l in 0..model.weights.len() {
                    Zip::from(&mut model.weights[l])
                        .and(&mut self.m_w[l])
                        .and(&mut self.v_w[l])
                        .and(&g.weights[l])
                        .for_each(|p, m, v, &g| update(p, m, v, g));
                    Zip::from(&mut model.biases[l])
                        .and(&mut self.m_b[l])
                        .and(&mut self.v_b[l])
                        .and(&g.biases[l])
                        .for_each(|p, m, v, &g| update(p, m, v, g));
                }
            }
        }
    }
}

/// Widens selected dataset rows to `f64`.
pub fn gather_rows(ds: &EncodedDataset, rows: &[usize]) -> (Array2<f64>, Vec<usize>) {
    let d = ds.width();
    let mut x = Array2::zeros((rows.len(), d));
    for (mut dst, &r) in x.rows_mut().into_iter().zip(rows) {
        dst.zip_mut_with(&ds.x.row(r), |a, &b| *a = b as f64);
    }
    (x, rows.iter().map(|&r| ds.y[r] as usize).collect())
}

fn check_dataset(model: &MlpModel, ds: &EncodedDataset) -> Result<()> {
    if ds.width() != model.input_width() {
        return Err(mismatch(
            format!("{} input columns", model.input_width()),
            format!("dataset with {}", ds.width()),
        ));
    }
    if let Some(&c) = ds.y.iter().find(|&&c| c as usize >= model.num_classes()) {
        return Err(MlpError::LabelOutOfRange {
            label: c as usize,
            classes: model.num_classes(),
        });
    }
    Ok(())
}

/// Weighted loss and plain accuracy over a whole dataset.
pub fn evaluate(
    model: &MlpModel,
    ds: &EncodedDataset,
    weights: Option<&ClassWeights>,
) -> Result<(f64, f64)> {
    check_dataset(model, ds)?;
    if ds.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut correct = 0usize;
    let all: Vec<usize> = (0..ds.len()).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let (x, y) = gather_rows(ds, chunk);
        let probs = forward(model, x.view())?;
        let w = sample_weights(&y, weights, model.num_classes())?;
        let (n, d) = weighted_nll(&probs, &y, &w);
        num += n;
        den += d;
        correct += argmax_rows(&probs)
            .iter()
            .zip(&y)
            .filter(|(p, t)| p == t)
            .count();
    }
    Ok((num / den, correct as f64 / ds.len() as f64))
}

/// Predicted class for every row of a dataset.
pub fn predict_dataset(model: &MlpModel, ds: &EncodedDataset) -> Result<Vec<usize>> {
    if ds.width() != model.input_width() {
        return Err(mismatch(model.input_width(), ds.width()));
    }
    let all: Vec<usize> = (0..ds.len()).collect();
    let mut out = Vec::with_capacity(ds.len());
    for chunk in all.chunks(EVAL_CHUNK) {
        let (x, _) = gather_rows(ds, chunk);
        out.extend(predict(model, x.view())?);
    }
    Ok(out)
}

/// Minibatch training for `config.epochs` epochs with a full validation
/// pass after each. No early stopping.
pub fn train(
    mut model: MlpModel,
    train_ds: &EncodedDataset,
    val_ds: &EncodedDataset,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    model.validate()?;
    check_dataset(&model, train_ds)?;
    check_dataset(&model, val_ds)?;
    if train_ds.is_empty() || val_ds.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    if let Some(w) = &config.class_weights {
        if w.len() != model.num_classes() {
            return Err(mismatch(
                format!("{} class weights", model.num_classes()),
                w.len(),
            ));
        }
    }
    let weights = config.class_weights.as_ref();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = OptimizerState::new(&model, config.optimizer, config.learning_rate);
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (x, y) = gather_rows(train_ds, batch);
            let g = gradients(&model, x.view(), &y, weights)?;
            if !g.loss.is_finite() {
                return Err(MlpError::NonFiniteLoss { epoch });
            }
            loss_sum += g.loss * batch.len() as f64;
            opt.apply(&mut model, &g);
        }
        let train_loss = loss_sum / train_ds.len() as f64;
        let (val_loss, val_accuracy) = evaluate(&model, val_ds, weights)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(MlpError::NonFiniteLoss { epoch });
        }
        info!(
            "epoch {epoch}/{}: train_loss={train_loss:.6} val_loss={val_loss:.6} val_accuracy={val_accuracy:.4}",
            config.epochs
        );
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_accuracy,
        });
    }
    Ok((model, history))
}

pub const MODEL_MAGIC: [u8; 4] = *b"ZMLP";
pub const MODEL_VERSION: u32 = 1;

// Layout (little-endian):
//   magic "ZMLP" | version u32 | activation u32 (0 = relu)
//   L+1 u32, dims as u64
//   K x (len u32, UTF-8 bytes)            class names
//   per layer: weights f64 row-major (fan-in x fan-out), then biases f64
//   CRC-32 u32 of all preceding bytes
pub fn to_bytes(model: &MlpModel) -> Result<Vec<u8>> {
    model.validate()?;
    let mut out = Vec::with_capacity(16 + model.parameter_count() * 8);
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(model.dims.len() as u32).to_le_bytes());
    for &d in &model.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for name in &model.class_names {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for (w, b) in model.weights.iter().zip(&model.biases) {
        for v in w.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in b.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| MlpError::CorruptModel {
            reason: "truncated".into(),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<MlpModel> {
    let corrupt = |reason: &str| MlpError::CorruptModel {
        reason: reason.to_string(),
    };
    if bytes.len() < 16 {
        return Err(corrupt("truncated"));
    }
    if bytes[..4] != MODEL_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(corrupt("checksum mismatch"));
    }
    let mut cur = Cursor { bytes: body, pos: 4 };
    let version = cur.u32()?;
    if version != MODEL_VERSION {
        return Err(MlpError::VersionMismatch { found: version });
    }
    if cur.u32()? != 0 {
        return Err(corrupt("unknown activation"));
    }
    let n = cur.u32()? as usize;
    if n < 2 || n > 64 {
        return Err(corrupt("implausible layer count"));
    }
    let dims = (0..n)
        .map(|_| cur.u64().map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    check_dims(&dims).map_err(|_| corrupt("invalid dims"))?;
    let expected = count_parameters(&dims);
    if expected.saturating_mul(8) > body.len() {
        return Err(corrupt("dims exceed file size"));
    }
    let k = dims[n - 1];
    let mut class_names = Vec::with_capacity(k);
    for _ in 0..k {
        let len = cur.u32()? as usize;
        let s = std::str::from_utf8(cur.take(len)?).map_err(|_| corrupt("class name not UTF-8"))?;
        class_names.push(s.to_string());
    }
    let mut weights = Vec::with_capacity(n - 1);
    let mut biases = Vec::with_capacity(n - 1);
    for w in dims.windows(2) {
        let data = (0..w[0] * w[1]).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        weights.push(Array2::from_shape_vec((w[0], w[1]), data).expect("sized by dims"));
        let data = (0..w[1]).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        biases.push(Array1::from(data));
    }
    if cur.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(MlpModel {
        dims,
        weights,
        biases,
        hidden_activation: Activation::Relu,
        class_names,
    })
}

pub fn save(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<MlpModel> {
    from_bytes(&fs::read(path)?)
}
