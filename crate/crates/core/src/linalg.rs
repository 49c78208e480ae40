//! Small dense-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest entry of `|A Aᵀ − I|` (rows orthonormal when small).
pub fn row_defect<T: Scalar>(a: &DMatrix<T>) -> T {
    let g = a * a.transpose();
    max_identity_gap(&g)
}

/// Largest entry of `|Aᵀ A − I|` (columns orthonormal when small).
pub fn col_defect<T: Scalar>(a: &DMatrix<T>) -> T {
    let g = a.transpose() * a;
    max_identity_gap(&g)
}

fn max_identity_gap<T: Scalar>(g: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let target = if r == c { T::one() } else { T::zero() };
            worst = worst.max((g[(r, c)] - target).abs());
        }
    }
    worst
}

/// Q factor of a thin QR decomposition with the sign convention `R_ii > 0`.
pub fn qr_positive<T: Scalar>(a: DMatrix<T>) -> Result<DMatrix<T>> {
    if a.nrows() < a.ncols() {
        return Err(Error::QrFailure);
    }
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..r.ncols().min(r.nrows()) {
        let d = r[(k, k)];
        if !d.is_finite() || d == T::zero() {
            return Err(Error::QrFailure);
        }
        if d < T::zero() {
            q.column_mut(k).neg_mut();
        }
    }
    Ok(q)
}

pub fn gaussian_matrix<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign corrected).
pub fn haar_orthogonal<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<T> {
    loop {
        if let Ok(q) = qr_positive(gaussian_matrix::<T, R>(n, n, rng)) {
            return q;
        }
    }
}

/// Haar-distributed rotation: a Haar orthogonal matrix with its last column
/// negated when the determinant is −1.
pub fn haar_special_orthogonal<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<T> {
    let mut q = haar_orthogonal::<T, R>(n, rng);
    if q.clone().determinant() < T::zero() {
        q.column_mut(n - 1).neg_mut();
    }
    q
}

/// Least-squares polynomial fit `y ≈ Σ_k c_k x^k` for `k = 0..=degree`.
/// Returns the coefficients (constant first) and R².
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= degree {
        return Err(Error::Invalid(format!("degree-{degree} fit needs {} distinct x values, got {}", degree + 1, distinct.len())));
    }
    let a = DMatrix::from_fn(xs.len(), degree + 1, |r, c| xs[r].powi(c as i32));
    let b = DVector::from_column_slice(ys);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).map_err(|e| Error::Invalid(e.to_string()))?;
    let fitted = &a * &coef;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = ys.iter().zip(fitted.iter()).map(|(y, f)| (y - f).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((coef.iter().copied().collect(), r2))
}
