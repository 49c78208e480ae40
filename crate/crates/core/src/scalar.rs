//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real scalar type the library is generic over: `f32` or `f64`.
///
/// Everything numeric (amplitudes, angles, weights, features) is stored as a
/// `Scalar`. Randomness and shot statistics are drawn in `f64` and converted.
pub trait Scalar:
    RealField + Copy + ToPrimitive + Debug + Display + LowerExp + FromStr + Send + Sync + 'static
{
    /// Converts an `f64` literal or statistic into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        nalgebra::convert(v)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_count(v: usize) -> Self {
        Self::lit(v as f64)
    }

    /// Unit roundoff of the type.
    fn epsilon() -> Self;

    /// `(cos x, sin x)` with a cost independent of the argument.
    fn cos_sin(self) -> (Self, Self);
}

impl Scalar for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }

    fn cos_sin(self) -> (Self, Self) {
        let (s, c) = libm::sincosf(self);
        (c, s)
    }
}

impl Scalar for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }

    fn cos_sin(self) -> (Self, Self) {
        let (s, c) = libm::sincos(self);
        (c, s)
    }
}

/// Euclidean norm of a slice.
pub fn norm2<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Largest absolute entry-wise difference.
pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}
