//! Model-agnostic KernelSHAP.
//!
//! A coalition `S` of features is scored by `v(S)`: the model output
//! averaged over background rows, where features in `S` are taken from the
//! explained row and the rest from the background row. Attributions solve a
//! weighted least-squares problem over coalition indicators with Shapley
//! kernel weights, subject to `sum(phi) = f(x) - E[f]`. With every proper
//! coalition enumerated the solution is exactly the Shapley value, which
//! [`exact_shapley`] computes independently by direct summation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mlp::{self, MlpModel};

/// Largest feature count for [`exact_shapley`].
pub const EXACT_MAX_FEATURES: usize = 15;

/// Ridge added to the reduced normal equations when they are singular.
pub const RIDGE: f64 = 1e-10;

/// Cap on rows per model call while evaluating coalitions.
const EVAL_ROWS: usize = 8192;

#[derive(Debug, Error)]
pub enum ShapError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("kernel weight undefined for coalition size {s} of {m} features")]
    OutOfRange { m: usize, s: usize },
    #[error("coalition budget must be at least 2, got {0}")]
    BadBudget(usize),
    #[error("need at least {min} features, got {found}")]
    TooFewFeatures { min: usize, found: usize },
    #[error("exact Shapley enumeration limited to {EXACT_MAX_FEATURES} features, got {0}")]
    TooManyFeatures(usize),
    #[error("empty background set")]
    EmptyBackground,
    #[error("weighted least-squares system is singular (class {class})")]
    SingularSystem { class: usize },
}

pub type Result<T> = std::result::Result<T, ShapError>;

fn mismatch(expected: impl ToString, found: impl ToString) -> ShapError {
    ShapError::ShapeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// A batch predictor returning one row of class scores per input row.
pub trait Model: Sync {
    fn input_width(&self) -> usize;
    fn output_width(&self) -> usize;
    fn predict(&self, x: ArrayView2<f64>) -> Array2<f64>;
}

impl Model for MlpModel {
    fn input_width(&self) -> usize {
        MlpModel::input_width(self)
    }

    fn output_width(&self) -> usize {
        self.num_classes()
    }

    fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        mlp::forward(self, x).expect("input width checked by the explainer")
    }
}

/// Adapts a per-row closure to [`Model`].
pub struct FnModel<F> {
    inputs: usize,
    outputs: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(ArrayView1<f64>) -> Vec<f64> + Sync,
{
    pub fn new(inputs: usize, outputs: usize, f: F) -> Self {
        Self { inputs, outputs, f }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(ArrayView1<f64>) -> Vec<f64> + Sync,
{
    fn input_width(&self) -> usize {
        self.inputs
    }

    fn output_width(&self) -> usize {
        self.outputs
    }

    fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.outputs));
        for (row, mut dst) in x.rows().into_iter().zip(out.rows_mut()) {
            let v = (self.f)(row);
            assert_eq!(v.len(), self.outputs, "closure output width");
            dst.assign(&Array1::from(v));
        }
        out
    }
}

/// Reference inputs that stand in for "absent" features.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    rows: Array2<f64>,
}

impl Background {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(ShapError::EmptyBackground);
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn width(&self) -> usize {
        self.rows.ncols()
    }
}

/// `C(n, k)` in floating point.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Shapley kernel weight `(M-1) / (C(M,s) * s * (M-s))` of one coalition of
/// size `s`.
pub fn kernel_weight(m: usize, s: usize) -> Result<f64> {
    if m < 2 || s == 0 || s >= m {
        return Err(ShapError::OutOfRange { m, s });
    }
    Ok((m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coalition {
    pub mask: Vec<bool>,
    pub weight: f64,
}

impl Coalition {
    pub fn size(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

pub fn default_budget(m: usize) -> usize {
    2 * m + 2048
}

/// All `2^M - 2` proper non-empty coalitions when they fit in `budget`,
/// otherwise `budget` coalitions sampled in complementary pairs.
///
/// Sampled sizes follow the aggregate kernel mass `(M-1) / (s (M-s))`; each
/// sample then carries an equal share of the total mass.
pub fn enumerate_or_sample_coalitions(m: usize, budget: usize, seed: u64) -> Result<Vec<Coalition>> {
    if budget < 2 {
        return Err(ShapError::BadBudget(budget));
    }
    if m < 2 {
        return Err(ShapError::TooFewFeatures { min: 2, found: m });
    }
    if m < 63 && (1u64 << m) - 2 <= budget as u64 {
        let full = (1u64 << m) - 1;
        return (1..full)
            .map(|bits| {
                let mask: Vec<bool> = (0..m).map(|j| bits >> j & 1 == 1).collect();
                let s = bits.count_ones() as usize;
                Ok(Coalition {
                    mask,
                    weight: kernel_weight(m, s)?,
                })
            })
            .collect();
    }

    let mass: Vec<f64> = (1..m)
        .map(|s| (m - 1) as f64 / (s * (m - s)) as f64)
        .collect();
    let total: f64 = mass.iter().sum();
    let mut cdf = Vec::with_capacity(mass.len());
    let mut acc = 0.0;
    for w in &mass {
        acc += w / total;
        cdf.push(acc);
    }
    let weight = total / budget as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<bool> {
        let u: f64 = rng.random();
        let s = 1 + cdf.iter().position(|&c| u < c).unwrap_or(m - 2);
        let mut mask = vec![false; m];
        for j in rand::seq::index::sample(rng, m, s) {
            mask[j] = true;
        }
        mask
    };
    let mut out = Vec::with_capacity(budget);
    for _ in 0..budget / 2 {
        let mask = draw(&mut rng);
        let complement = mask.iter().map(|b| !b).collect();
        out.push(Coalition { mask, weight });
        out.push(Coalition {
            mask: complement,
            weight,
        });
    }
    if budget % 2 == 1 {
        out.push(Coalition {
            mask: draw(&mut rng),
            weight,
        });
    }
    Ok(out)
}

fn check_widths<M: Model + ?Sized>(model: &M, width: usize, background: &Background) -> Result<()> {
    if width != model.input_width() {
        return Err(mismatch(format!("{} features", model.input_width()), width));
    }
    if background.width() != model.input_width() {
        return Err(mismatch(
            format!("background with {} features", model.input_width()),
            background.width(),
        ));
    }
    Ok(())
}

/// Mean model output per coalition; one row per mask.
fn masked_evals<M: Model + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    background: &Background,
    masks: &[&[bool]],
) -> Array2<f64> {
    let b = background.len();
    let m = x.len();
    let per_call = (EVAL_ROWS / b).max(1);
    let mut out = Array2::zeros((masks.len(), model.output_width()));
    for (chunk_idx, chunk) in masks.chunks(per_call).enumerate() {
        let mut z = Array2::zeros((chunk.len() * b, m));
        for (c, mask) in chunk.iter().enumerate() {
            for (i, bg) in background.rows.rows().into_iter().enumerate() {
                let mut row = z.row_mut(c * b + i);
                for j in 0..m {
                    row[j] = if mask[j] { x[j] } else { bg[j] };
                }
            }
        }
        let preds = model.predict(z.view());
        for c in 0..chunk.len() {
            let mean = preds
                .slice(ndarray::s![c * b..(c + 1) * b, ..])
                .mean_axis(Axis(0))
                .expect("non-empty background");
            out.row_mut(chunk_idx * per_call + c).assign(&mean);
        }
    }
    out
}

/// Model output averaged over background rows with features in `mask`
/// taken from `x`.
pub fn masked_eval<M: Model + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    background: &Background,
    mask: &[bool],
) -> Result<Vec<f64>> {
    check_widths(model, x.len(), background)?;
    if mask.len() != x.len() {
        return Err(mismatch(format!("mask of {}", x.len()), mask.len()));
    }
    Ok(masked_evals(model, x, background, &[mask]).row(0).to_vec())
}

/// Expected model output over the background set.
pub fn base_values<M: Model + ?Sized>(model: &M, background: &Background) -> Array1<f64> {
    model
        .predict(background.rows())
        .mean_axis(Axis(0))
        .expect("non-empty background")
}

/// Attributions for a set of explained rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    /// One `n x M` matrix per output class.
    pub phi: Vec<Array2<f64>>,
    /// `E_background[f]` per class.
    pub base_values: Vec<f64>,
    /// `f(x_i)`, `n x K`.
    pub predictions: Array2<f64>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl Explanation {
    pub fn num_rows(&self) -> usize {
        self.predictions.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn with_names(mut self, features: Vec<String>, classes: Vec<String>) -> Result<Self> {
        if features.len() != self.num_features() {
            return Err(mismatch(self.num_features(), features.len()));
        }
        if classes.len() != self.class_names.len() {
            return Err(mismatch(self.class_names.len(), classes.len()));
        }
        self.feature_names = features;
        self.class_names = classes;
        Ok(self)
    }

    /// Largest `|sum(phi) + base - f(x)|` over rows, per class.
    pub fn efficiency_residuals(&self) -> Vec<f64> {
        self.phi
            .iter()
            .enumerate()
            .map(|(k, phi)| {
                phi.rows()
                    .into_iter()
                    .zip(self.predictions.column(k))
                    .map(|(row, &fx)| (row.sum() + self.base_values[k] - fx).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Attributions of one class: a `# base_value=...` line, a header of
    /// feature names, then one row per explained instance.
    pub fn class_csv(&self, class: usize) -> String {
        let mut out = format!("# base_value={}\n", self.base_values[class]);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.feature_names).expect("in-memory write");
        for row in self.phi[class].rows() {
            w.write_record(row.iter().map(|v| v.to_string()))
                .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8"));
        out
    }
}

/// Dense Cholesky factor of a symmetric positive-definite matrix, or `None`
/// when a pivot is not safely positive.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[[i, i]].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-14;
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > tol) {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[[i, k]] * y[k];
        }
        y[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[[k, i]] * y[k];
        }
        y[i] /= l[[i, i]];
    }
    y
}

/// Reduced design for the constrained least squares: the last feature is
/// eliminated through the efficiency constraint, so column `j` holds
/// `z_j - z_last` for `j < M-1`.
struct ReducedSystem {
    design: Array2<f64>,
    last: Array1<f64>,
    weights: Array1<f64>,
    factor: Array2<f64>,
}

impl ReducedSystem {
    fn new(coalitions: &[Coalition], m: usize) -> Result<Self> {
        let n = coalitions.len();
        let mut design = Array2::zeros((n, m - 1));
        let mut last = Array1::zeros(n);
        let mut weights = Array1::zeros(n);
        for (i, c) in coalitions.iter().enumerate() {
            let zl = if c.mask[m - 1] { 1.0 } else { 0.0 };
            last[i] = zl;
            weights[i] = c.weight;
            for j in 0..m - 1 {
                design[[i, j]] = (if c.mask[j] { 1.0 } else { 0.0 }) - zl;
            }
        }
        let mut weighted = design.clone();
        for (mut row, &w) in weighted.rows_mut().into_iter().zip(&weights) {
            row *= w;
        }
        let mut normal = design.t().dot(&weighted);
        let factor = match cholesky(&normal) {
            Some(f) => f,
            None => {
                normal.diag_mut().mapv_inplace(|d| d + RIDGE);
                cholesky(&normal).ok_or(ShapError::SingularSystem { class: 0 })?
            }
        };
        Ok(Self {
            design,
            last,
            weights,
            factor,
        })
    }

    /// Attributions for coalition values `v` (base already subtracted) and
    /// total effect `delta = f(x) - E[f]`.
    fn solve(&self, v: ArrayView1<f64>, delta: f64) -> Array1<f64> {
        let target = &v.to_owned() - &(&self.last * delta);
        let rhs = self.design.t().dot(&(&target * &self.weights));
        let partial = cholesky_solve(&self.factor, &rhs);
        let m = partial.len() + 1;
        let mut phi = Array1::zeros(m);
        phi.slice_mut(ndarray::s![..m - 1]).assign(&partial);
        phi[m - 1] = delta - partial.sum();
        phi
    }
}

/// KernelSHAP attributions of every row of `x_rows` for every model output.
///
/// The same coalition set (determined by `budget` and `seed`) is used for all
/// rows.
pub fn kernel_shap<M: Model + ?Sized>(
    model: &M,
    x_rows: ArrayView2<f64>,
    background: &Background,
    budget: usize,
    seed: u64,
) -> Result<Explanation> {
    let m = x_rows.ncols();
    check_widths(model, m, background)?;
    if m < 2 {
        return Err(ShapError::TooFewFeatures { min: 2, found: m });
    }
    let coalitions = enumerate_or_sample_coalitions(m, budget, seed)?;
    let system = ReducedSystem::new(&coalitions, m)?;
    let masks: Vec<&[bool]> = coalitions.iter().map(|c| c.mask.as_slice()).collect();
    let k = model.output_width();
    let base = base_values(model, background);
    let predictions = model.predict(x_rows);
    let n = x_rows.nrows();
    let mut phi = vec![Array2::zeros((n, m)); k];
    for (i, x) in x_rows.rows().into_iter().enumerate() {
        let values = masked_evals(model, x, background, &masks);
        for class in 0..k {
            let v = values.column(class).mapv(|v| v - base[class]);
            let delta = predictions[[i, class]] - base[class];
            let p = system.solve(v.view(), delta);
            if p.iter().any(|v| !v.is_finite()) {
                return Err(ShapError::SingularSystem { class });
            }
            phi[class].row_mut(i).assign(&p);
        }
    }
    Ok(Explanation {
        phi,
        base_values: base.to_vec(),
        predictions,
        feature_names: (0..m).map(|j| format!("x{j}")).collect(),
        class_names: (0..k).map(|c| c.to_string()).collect(),
    })
}

/// Shapley values by summation over all `2^M` coalitions; returns a
/// `K x M` matrix.
pub fn exact_shapley<M: Model + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    background: &Background,
) -> Result<Array2<f64>> {
    let m = x.len();
    check_widths(model, m, background)?;
    if m > EXACT_MAX_FEATURES {
        return Err(ShapError::TooManyFeatures(m));
    }
    if m == 0 {
        return Err(ShapError::TooFewFeatures { min: 1, found: 0 });
    }
    let subsets = 1usize << m;
    let owned: Vec<Vec<bool>> = (0..subsets)
        .map(|bits| (0..m).map(|j| bits >> j & 1 == 1).collect())
        .collect();
    let masks: Vec<&[bool]> = owned.iter().map(Vec::as_slice).collect();
    let values = masked_evals(model, x, background, &masks);

    let factorial = |n: usize| (1..=n).fold(1.0f64, |a, i| a * i as f64);
    let coef: Vec<f64> = (0..m)
        .map(|s| factorial(s) * factorial(m - s - 1) / factorial(m))
        .collect();
    let k = model.output_width();
    let mut phi = Array2::zeros((k, m));
    for j in 0..m {
        let bit = 1usize << j;
        for s in (0..subsets).filter(|s| s & bit == 0) {
            let w = coef[s.count_ones() as usize];
            for class in 0..k {
                phi[[class, j]] += w * (values[[s | bit, class]] - values[[s, class]]);
            }
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub index: usize,
    pub name: String,
    pub mean_abs: f64,
}

/// Per class, the `k` features with the largest mean `|phi|` over explained
/// rows; ties go to the lower feature index.
pub fn top_features(expl: &Explanation, k: usize) -> Vec<Vec<RankedFeature>> {
    expl.phi
        .iter()
        .map(|phi| {
            let n = phi.nrows().max(1) as f64;
            let mut ranked: Vec<RankedFeature> = phi
                .columns()
                .into_iter()
                .enumerate()
                .map(|(j, col)| RankedFeature {
                    index: j,
                    name: expl.feature_names[j].clone(),
                    mean_abs: col.iter().map(|v| v.abs()).sum::<f64>() / n,
                })
                .collect();
            ranked.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs).then(a.index.cmp(&b.index)));
            ranked.truncate(k.max(1));
            ranked
        })
        .collect()
}

/// CSV `class,rank,feature,mean_abs_shap`, ranks starting at 1.
pub fn top_features_csv(ranking: &[Vec<RankedFeature>], class_names: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "rank", "feature", "mean_abs_shap"])
        .expect("in-memory write");
    for (class, list) in class_names.iter().zip(ranking) {
        for (rank, f) in list.iter().enumerate() {
            w.write_record([
                class.clone(),
                (rank + 1).to_string(),
                f.name.clone(),
                f.mean_abs.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn linear(coef: Vec<f64>) -> FnModel<impl Fn(ArrayView1<f64>) -> Vec<f64> + Sync> {
        let m = coef.len();
        FnModel::new(m, 1, move |x: ArrayView1<f64>| {
            vec![x.iter().zip(&coef).map(|(a, b)| a * b).sum()]
        })
    }

    #[test]
    fn kernel_weight_examples() {
        assert_eq!(kernel_weight(4, 1).unwrap(), 3.0 / (4.0 * 1.0 * 3.0));
        assert_eq!(kernel_weight(4, 2).unwrap(), 0.125);
        for m in 2..30 {
            for s in 1..m {
                let a = kernel_weight(m, s).unwrap();
                let b = kernel_weight(m, m - s).unwrap();
                assert!((a - b).abs() <= 1e-15 * a.abs());
            }
        }
        assert!(matches!(kernel_weight(4, 0), Err(ShapError::OutOfRange { .. })));
        assert!(matches!(kernel_weight(4, 4), Err(ShapError::OutOfRange { .. })));
        assert!(kernel_weight(122, 61).unwrap() > 0.0);
    }

    #[test]
    fn enumeration_when_budget_allows() {
        let c = enumerate_or_sample_coalitions(3, 10, 0).unwrap();
        assert_eq!(c.len(), 6);
        assert!(c.iter().all(|c| (1..3).contains(&c.size())));
        assert_eq!(c[0].weight, kernel_weight(3, 1).unwrap());
        assert!(matches!(
            enumerate_or_sample_coalitions(3, 1, 0),
            Err(ShapError::BadBudget(1))
        ));
    }

    #[test]
    fn sampling_pairs_complements() {
        let c = enumerate_or_sample_coalitions(20, 2048, 4).unwrap();
        assert_eq!(c.len(), 2048);
        for pair in c.chunks(2) {
            assert!(pair[0].mask.iter().zip(&pair[1].mask).all(|(a, b)| a != b));
            assert!((1..20).contains(&pair[0].size()));
        }
        assert_eq!(c, enumerate_or_sample_coalitions(20, 2048, 4).unwrap());
        assert_ne!(c, enumerate_or_sample_coalitions(20, 2048, 5).unwrap());
        assert_eq!(enumerate_or_sample_coalitions(20, 7, 4).unwrap().len(), 7);
    }

    #[test]
    fn masked_eval_extremes() {
        let model = linear(vec![1.0, 2.0, 3.0]);
        let bg = Background::new(array![[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]]).unwrap();
        let x = array![1.0, 1.0, 1.0];
        assert_eq!(masked_eval(&model, x.view(), &bg, &[true; 3]).unwrap(), [6.0]);
        assert_eq!(masked_eval(&model, x.view(), &bg, &[false; 3]).unwrap(), [6.0]);
        let single = Background::new(array![[5.0, 0.0, 0.0]]).unwrap();
        assert_eq!(
            masked_eval(&model, x.view(), &single, &[false, true, true]).unwrap(),
            [5.0 + 2.0 + 3.0]
        );
        assert!(masked_eval(&model, x.view(), &bg, &[true; 2]).is_err());
    }

    #[test]
    fn linear_model_closed_form() {
        // phi_j = c_j (x_j - mean_b b_j)
        let coef = vec![2.0, -1.0, 0.5];
        let model = linear(coef.clone());
        let bg = Background::new(array![[0.0, 1.0, 2.0], [2.0, 3.0, 0.0]]).unwrap();
        let x = array![[3.0, 0.0, 4.0]];
        let e = kernel_shap(&model, x.view(), &bg, 100, 0).unwrap();
        let means = [1.0, 2.0, 1.0];
        for j in 0..3 {
            let want = coef[j] * (x[[0, j]] - means[j]);
            assert!((e.phi[0][[0, j]] - want).abs() < 1e-6, "feature {j}");
        }
        let exact = exact_shapley(&model, x.row(0), &bg).unwrap();
        assert!((exact[[0, 0]] - 4.0).abs() < 1e-12);
        assert!((exact[[0, 1]] - 2.0).abs() < 1e-12);
        assert!((exact[[0, 2]] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dummy_feature_gets_zero() {
        let model = FnModel::new(3, 2, |x: ArrayView1<f64>| {
            let s = (x[0] * x[2]).tanh();
            vec![s, 1.0 - s]
        });
        let bg = Background::new(array![[0.1, 7.0, 0.4], [0.9, 7.0, -0.3]]).unwrap();
        let x = array![[0.5, 7.0, 1.0]];
        let e = kernel_shap(&model, x.view(), &bg, 64, 0).unwrap();
        for phi in &e.phi {
            assert!(phi[[0, 1]].abs() < 1e-8);
        }
        assert!(e.efficiency_residuals().iter().all(|&r| r < 1e-10));
    }

    #[test]
    fn exact_single_feature_and_symmetry() {
        let model = FnModel::new(1, 1, |x: ArrayView1<f64>| vec![x[0] * x[0]]);
        let bg = Background::new(array![[1.0], [3.0]]).unwrap();
        let phi = exact_shapley(&model, array![2.0].view(), &bg).unwrap();
        assert_eq!(phi[[0, 0]], 4.0 - 5.0);

        let sym = FnModel::new(3, 1, |x: ArrayView1<f64>| vec![(x[0] * x[1]).sin() + x[2]]);
        let bg = Background::new(array![[0.3, 0.3, 1.0], [0.7, 0.7, 0.0]]).unwrap();
        let phi = exact_shapley(&sym, array![1.2, 1.2, 0.5].view(), &bg).unwrap();
        assert!((phi[[0, 0]] - phi[[0, 1]]).abs() < 1e-12);
        assert!(matches!(
            exact_shapley(&linear(vec![1.0; 16]), Array1::zeros(16).view(), &Background::new(Array2::zeros((1, 16))).unwrap()),
            Err(ShapError::TooManyFeatures(16))
        ));
    }

    #[test]
    fn top_feature_ranking() {
        let e = Explanation {
            phi: vec![array![[0.1, -0.5, 0.5], [0.1, -0.1, 0.1]]],
            base_values: vec![0.0],
            predictions: array![[0.0], [0.0]],
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            class_names: vec!["k".into()],
        };
        let t = top_features(&e, 10);
        let names: Vec<_> = t[0].iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["b", "c", "a"]);
        assert_eq!(top_features(&e, 1)[0].len(), 1);
        let csv = top_features_csv(&t, &e.class_names);
        assert!(csv.starts_with("class,rank,feature,mean_abs_shap\nk,1,b,0.3\n"));
        assert!(e.class_csv(0).starts_with("# base_value=0\na,b,c\n0.1,-0.5,0.5\n"));
    }

    #[test]
    fn width_mismatch_rejected() {
        let model = linear(vec![1.0, 1.0]);
        let bg = Background::new(Array2::zeros((1, 3))).unwrap();
        assert!(matches!(
            kernel_shap(&model, Array2::zeros((1, 2)).view(), &bg, 10, 0),
            Err(ShapError::ShapeMismatch { .. })
        ));
        assert!(Background::new(Array2::zeros((0, 3))).is_err());
    }
}
