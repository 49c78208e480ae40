//! Datasets, CSV ingestion, PCA, per-sample normalization, splitting and
//! binary-classification metrics.

mod dataset;
mod metrics;
mod pca;
mod synthetic;

pub use dataset::{load_csv, normalize_rows, read_csv, split, undersample, Dataset};
pub use metrics::{auc, evaluate, Confusion, Metrics};
pub use pca::{fit_pca, PcaModel};
pub use synthetic::{make_toy_pca4, toy_pca4, two_class, TOY_PCA4_CSV};
