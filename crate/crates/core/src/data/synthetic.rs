use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::scalar::Scalar;

use super::{fit_pca, read_csv, Dataset};

/// Two Gaussian classes with identity covariance and means `±separation·u`
/// for a random unit direction `u`; labels alternate 0, 1, 0, …
pub fn two_class<T: Scalar>(m: usize, dim: usize, separation: f64, seed: u64) -> Result<Dataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    u.iter_mut().for_each(|v| *v /= norm);
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let label = (i % 2) as u8;
        let sign = if label == 1 { separation } else { -separation };
        rows.push(
            u.iter()
                .map(|&uk| T::lit(sign * uk + rng.sample::<f64, _>(StandardNormal)))
                .collect(),
        );
        labels.push(label);
    }
    Dataset::new(rows, labels)
}

/// The bundled 500-sample, 4-feature binary dataset (label column `label`).
pub const TOY_PCA4_CSV: &str = include_str!("../../data/toy_pca4.csv");

/// Parses the bundled dataset.
pub fn toy_pca4<T: Scalar>() -> Dataset<T> {
    read_csv(TOY_PCA4_CSV.as_bytes(), "label").expect("bundled dataset is well formed")
}

/// Regenerates the bundled dataset: 16-dimensional two-class data reduced to
/// its first 4 principal components.
pub fn make_toy_pca4() -> Result<Dataset<f64>> {
    let raw = two_class::<f64>(500, 16, 1.7, 2024)?;
    fit_pca(&raw, 4)?.transform(&raw)
}
