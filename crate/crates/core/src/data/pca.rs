use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Dataset;

/// Principal components fitted on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T: Scalar> {
    pub mean: DVector<T>,
    /// `k × d`, orthonormal rows, by decreasing variance.
    pub components: DMatrix<T>,
    pub explained_variance: Vec<T>,
    /// Trace of the sample covariance.
    pub total_variance: T,
    /// Some kept component has (numerically) zero variance.
    pub rank_deficient: bool,
}

/// Eigendecomposition of the sample covariance (denominator `m − 1`).
pub fn fit_pca<T: Scalar>(ds: &Dataset<T>, k: usize) -> Result<PcaModel<T>> {
    let (m, d) = (ds.len(), ds.dim());
    if k == 0 || k > m.min(d) {
        return Err(Error::Invalid(format!("PCA needs 1 ≤ k ≤ min(m, d) = {}, got {k}", m.min(d))));
    }
    let x = DMatrix::from_row_iterator(m, d, ds.rows().flatten().copied());
    let mean = x.row_mean().transpose();
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / <T as Scalar>::from_count(m - 1);
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut components = DMatrix::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    for (r, &c) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(c).clone_owned();
        // sign convention: largest-magnitude entry positive
        let pivot = v.iamax();
        if v[pivot] < T::zero() {
            v.neg_mut();
        }
        components.row_mut(r).copy_from(&v.transpose());
        explained_variance.push(eig.eigenvalues[c].max(T::zero()));
    }
    let floor = T::lit(1e3) * T::epsilon() * total_variance.max(T::one());
    let rank_deficient = explained_variance.iter().any(|&v| v <= floor);
    Ok(PcaModel { mean, components, explained_variance, total_variance, rank_deficient })
}

impl<T: Scalar> PcaModel<T> {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    /// Fraction of the total variance captured by each kept component.
    pub fn explained_variance_ratio(&self) -> Vec<T> {
        self.explained_variance.iter().map(|&v| v / self.total_variance).collect()
    }

    pub fn project(&self, x: &[T]) -> Vec<T> {
        let centered = DVector::from_column_slice(x) - &self.mean;
        (&self.components * centered).iter().copied().collect()
    }

    pub fn reconstruct(&self, z: &[T]) -> Vec<T> {
        let v = self.components.transpose() * DVector::from_column_slice(z) + &self.mean;
        v.iter().copied().collect()
    }

    pub fn transform(&self, ds: &Dataset<T>) -> Result<Dataset<T>> {
        if ds.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), actual: ds.dim() });
        }
        let features: Vec<T> = ds.rows().flat_map(|r| self.project(r)).collect();
        let names = (0..self.k()).map(|c| format!("pc{c}")).collect();
        ds.with_features(features, self.k())?.with_names(names)
    }
}
