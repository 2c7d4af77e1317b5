//! Intrusion-detection experiments on KDD99 connection records.
//!
//! The pipeline runs [`dataset`] (parse, schema, label taxonomy) →
//! [`preprocess`] (encoding, stratified split, class weights) → [`mlp`]
//! (training) → [`metrics`] (reports) → [`shap`] (KernelSHAP explanations).

pub mod dataset;
pub mod metrics;
pub mod mlp;
pub mod preprocess;
pub mod shap;
pub mod synth;

use thiserror::Error;

/// Any error raised by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error(transparent)]
    Mlp(#[from] mlp::MlpError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Shap(#[from] shap::ShapError),
}
