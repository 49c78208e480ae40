use crate::scalar::Scalar;

/// Reconfigurable beam splitter gate on an ordered qubit pair.
///
/// On the unary subspace the gate is the planar rotation
/// `[[cos θ, sin θ], [-sin θ, cos θ]]` acting on coordinates `(i, j)`:
/// `e_i ↦ cos θ·e_i − sin θ·e_j` and `e_j ↦ sin θ·e_i + cos θ·e_j`.
/// Swapping the pair is equivalent to negating the angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbsGate<T> {
    pub i: usize,
    pub j: usize,
    pub theta: T,
}

impl<T: Scalar> RbsGate<T> {
    pub fn new(i: usize, j: usize, theta: T) -> Self {
        RbsGate { i, j, theta }
    }

    /// Smaller of the two qubit indices.
    pub fn top(&self) -> usize {
        self.i.min(self.j)
    }

    /// Rotates coordinates `(i, j)` of `v` in place.
    #[inline]
    pub fn apply(&self, v: &mut [T]) {
        let (c, s) = self.theta.cos_sin();
        rotate(v, self.i, self.j, c, s);
    }

    /// Applies the transpose (inverse) rotation in place.
    #[inline]
    pub fn apply_transpose(&self, v: &mut [T]) {
        let (c, s) = self.theta.cos_sin();
        rotate(v, self.i, self.j, c, -s);
    }

    pub fn inverse(&self) -> Self {
        RbsGate { i: self.i, j: self.j, theta: -self.theta }
    }
}

#[inline(always)]
pub(crate) fn rotate<T: Scalar>(v: &mut [T], i: usize, j: usize, c: T, s: T) {
    let a = v[i];
    let b = v[j];
    v[i] = c * a + s * b;
    v[j] = c * b - s * a;
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quarter_turn_sends_first_coordinate_to_minus_second() {
        let mut v = [1.0, 0.0];
        RbsGate::new(0, 1, FRAC_PI_2).apply(&mut v);
        assert!(v[0].abs() < 1e-15);
        assert!((v[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn swapped_pair_equals_negated_angle() {
        let mut a = [0.3f64, -0.7, 0.2];
        let mut b = a;
        RbsGate::new(0, 2, 0.4).apply(&mut a);
        RbsGate::new(2, 0, -0.4).apply(&mut b);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn transpose_undoes_rotation() {
        let mut v = [0.6f64, 0.8];
        let g = RbsGate::new(0, 1, 1.1);
        g.apply(&mut v);
        g.apply_transpose(&mut v);
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
    }
}
