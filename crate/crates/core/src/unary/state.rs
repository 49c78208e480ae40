use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};

/// Real amplitudes over the unary basis `e_0 .. e_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryState<T> {
    amps: Vec<T>,
}

/// Tolerance used for unit-norm checks; widened for single precision.
pub fn unit_tolerance<T: Scalar>() -> T {
    T::lit(1e-10).max(T::lit(1e3) * T::epsilon())
}

impl<T: Scalar> UnaryState<T> {
    /// Wraps amplitudes that must already have unit norm.
    pub fn new(amps: Vec<T>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let norm = norm2(&amps);
        if (norm - T::one()).abs() > unit_tolerance::<T>() {
            return Err(Error::NormError { norm: norm.as_f64() });
        }
        Ok(UnaryState { amps })
    }

    /// Normalizes `x` and returns the state together with the original norm.
    pub fn from_vector(x: &[T]) -> Result<(Self, T)> {
        if x.len() < 2 {
            return Err(Error::DimensionTooSmall(x.len()));
        }
        let norm = norm2(x);
        if norm == T::zero() {
            return Err(Error::ZeroVector);
        }
        let amps = x.iter().map(|&v| v / norm).collect();
        Ok((UnaryState { amps }, norm))
    }

    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if k >= n {
            return Err(Error::Invalid(format!("basis index {k} out of range for n={n}")));
        }
        let mut amps = vec![T::zero(); n];
        amps[k] = T::one();
        Ok(UnaryState { amps })
    }

    pub(crate) fn from_raw(amps: Vec<T>) -> Self {
        UnaryState { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[T] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<T> {
        self.amps
    }

    /// Measurement probabilities `amp_i²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| (*a * *a).as_f64()).collect()
    }
}
