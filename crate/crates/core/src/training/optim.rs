use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::qr_positive;
use crate::scalar::Scalar;

/// Clamps the singular values of `a` to `[1 − eps, 1 + eps]`.
pub fn clamp_singular_values<T: Scalar>(a: DMatrix<T>, eps: T) -> Result<DMatrix<T>> {
    let svd = a.try_svd(true, true, T::epsilon(), 0).ok_or(Error::SvdFailure)?;
    let (lo, hi) = (T::one() - eps, T::one() + eps);
    let sigma = svd.singular_values.map(|s| s.clamp(lo, hi));
    let u = svd.u.ok_or(Error::SvdFailure)?;
    let v_t = svd.v_t.ok_or(Error::SvdFailure)?;
    Ok(u * DMatrix::from_diagonal(&sigma) * v_t)
}

/// Singular value bounding: a plain gradient step followed by clamping the
/// singular values to `[1 − eps, 1 + eps]`.
pub fn svb_update<T: Scalar>(w: &DMatrix<T>, g: &DMatrix<T>, lr: T, eps: T) -> Result<DMatrix<T>> {
    if w.shape() != g.shape() {
        return Err(Error::DimensionMismatch { expected: w.len(), actual: g.len() });
    }
    clamp_singular_values(w - g * lr, eps)
}

/// Projection of `g` on the tangent space of the Stiefel manifold at `w`
/// (orthonormal columns): `(I − W Wᵀ) G + ½ W (Wᵀ G − Gᵀ W)`.
pub fn stiefel_direction<T: Scalar>(w: &DMatrix<T>, g: &DMatrix<T>) -> DMatrix<T> {
    let wtg = w.tr_mul(g);
    let skew = (&wtg - wtg.transpose()) * T::lit(0.5);
    g - w * wtg + w * skew
}

/// Riemannian gradient step followed by a QR retraction with `R_ii > 0`.
/// Wide matrices (orthonormal rows) are handled through their transpose.
pub fn stiefel_update<T: Scalar>(w: &DMatrix<T>, g: &DMatrix<T>, lr: T) -> Result<DMatrix<T>> {
    if w.shape() != g.shape() {
        return Err(Error::DimensionMismatch { expected: w.len(), actual: g.len() });
    }
    if w.nrows() < w.ncols() {
        return Ok(stiefel_update(&w.transpose(), &g.transpose(), lr)?.transpose());
    }
    let omega = stiefel_direction(w, g);
    qr_positive(w - omega * lr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{col_defect, gaussian_matrix, haar_orthogonal, row_defect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svb_fixes_orthogonal_and_clamps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = haar_orthogonal::<f64, _>(5, &mut rng);
        let out = svb_update(&w, &DMatrix::zeros(5, 5), 0.1, 0.01).unwrap();
        assert!((out - &w).abs().max() < 1e-12);

        let u = haar_orthogonal::<f64, _>(2, &mut rng);
        let v = haar_orthogonal::<f64, _>(2, &mut rng);
        let a = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5])) * v.transpose();
        let c = clamp_singular_values(a, 0.01).unwrap();
        let mut s: Vec<f64> = c.singular_values().iter().copied().collect();
        s.sort_by(f64::total_cmp);
        assert!((s[0] - 0.99).abs() < 1e-12 && (s[1] - 1.01).abs() < 1e-12);
    }

    #[test]
    fn svb_drift_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eps = 0.01;
        let mut w = haar_orthogonal::<f64, _>(6, &mut rng);
        for _ in 0..100 {
            let g = gaussian_matrix::<f64, _>(6, 6, &mut rng);
            w = svb_update(&w, &g, 0.1, eps).unwrap();
        }
        // σ ∈ [1−ε, 1+ε] ⇒ |σ² − 1| ≤ 2ε + ε²
        assert!(col_defect(&w) <= 2.0 * eps + eps * eps + 1e-8);
    }

    #[test]
    fn stiefel_zero_gradient_and_tangency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = haar_orthogonal::<f64, _>(7, &mut rng).columns(0, 4).clone_owned();
        let same = stiefel_update(&w, &DMatrix::zeros(7, 4), 0.5).unwrap();
        assert!((same - &w).abs().max() < 1e-12);

        let g = gaussian_matrix::<f64, _>(7, 4, &mut rng);
        let omega = stiefel_direction(&w, &g);
        let s = w.tr_mul(&omega);
        assert!((&s + s.transpose()).abs().max() < 1e-12);
        for lr in [1e-2, 1e-3] {
            let step = w.tr_mul(&(&w - &omega * lr));
            let expect = DMatrix::identity(4, 4) - &s * lr;
            assert!((step - expect).abs().max() < 10.0 * lr * lr + 1e-12);
        }
    }

    #[test]
    fn stiefel_stays_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut tall = haar_orthogonal::<f64, _>(8, &mut rng).columns(0, 3).clone_owned();
        let mut wide = haar_orthogonal::<f64, _>(8, &mut rng).rows(0, 2).clone_owned();
        for _ in 0..100 {
            tall = stiefel_update(&tall, &gaussian_matrix::<f64, _>(8, 3, &mut rng), 0.05).unwrap();
            wide = stiefel_update(&wide, &gaussian_matrix::<f64, _>(2, 8, &mut rng), 0.05).unwrap();
            assert!(col_defect(&tall) < 1e-10);
            assert!(row_defect(&wide) < 1e-10);
        }
    }
}
