pub mod bench;
pub mod decompose;
pub mod ip_demo;
pub mod train;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use orthonn::data::{load_csv, toy_pca4, Dataset};

use crate::errors::Validation;

/// Name accepted by `--data` for the bundled PCA-4 dataset.
pub const BUNDLED_TOY: &str = "toy";

pub fn load_dataset(source: &str, label_column: &str) -> Result<Dataset<f64>> {
    if source == BUNDLED_TOY {
        return Ok(toy_pca4());
    }
    if !Path::new(source).is_file() {
        return Err(Validation::field("data", format!("no such file '{source}'")).into());
    }
    load_csv(source, label_column).map_err(|e| Validation::field("data", format!("{source}: {e}")).into())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}
