//! Dense `2^n` statevector simulator used as an independent reference for
//! the unary-subspace backend.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::circuit::Circuit;

pub const MAX_FULL_WIDTH: usize = 14;

/// Simulates `c` on the computational basis state `basis` (bit `q` of the
/// index is qubit `q`) over the full Hilbert space.
///
/// Each RBS gate acts as the 4×4 matrix that fixes `|00⟩`, `|11⟩` and rotates
/// the `(1_i 0_j, 0_i 1_j)` pair exactly like its unary restriction.
pub fn apply_full_statevector<T: Scalar>(c: &Circuit<T>, basis: usize) -> Result<Vec<T>> {
    let n = c.width();
    if n > MAX_FULL_WIDTH {
        return Err(Error::TooWide { width: n, max: MAX_FULL_WIDTH });
    }
    let dim = 1usize << n;
    if basis >= dim {
        return Err(Error::Invalid(format!("basis index {basis} exceeds 2^{n}")));
    }
    let mut psi = vec![T::zero(); dim];
    psi[basis] = T::one();
    for g in c.gates() {
        let (cth, s) = g.theta.cos_sin();
        let bi = 1usize << g.i;
        let bj = 1usize << g.j;
        for idx in 0..dim {
            // visit each (i=1, j=0) / (i=0, j=1) pair once
            if idx & bi != 0 && idx & bj == 0 {
                let partner = (idx & !bi) | bj;
                let a = psi[idx];
                let b = psi[partner];
                psi[idx] = cth * a + s * b;
                psi[partner] = cth * b - s * a;
            }
        }
    }
    if c.z_flip() {
        let last = 1usize << (n - 1);
        for (idx, amp) in psi.iter_mut().enumerate() {
            if idx & last != 0 {
                *amp = -*amp;
            }
        }
    }
    Ok(psi)
}

/// Amplitudes of the unary basis states `e_0 .. e_{n-1}` inside a full statevector.
pub fn unary_restriction<T: Scalar>(psi: &[T], n: usize) -> Vec<T> {
    (0..n).map(|k| psi[1usize << k]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unary::gate::RbsGate;

    #[test]
    fn empty_circuit_keeps_basis_state() {
        let c = Circuit::<f64>::empty(4);
        let psi = apply_full_statevector(&c, 0b1010).unwrap();
        assert_eq!(psi[0b1010], 1.0);
        assert_eq!(psi.iter().filter(|a| **a != 0.0).count(), 1);
    }

    #[test]
    fn too_wide_is_rejected() {
        let c = Circuit::<f64>::empty(15);
        assert!(matches!(apply_full_statevector(&c, 0), Err(Error::TooWide { width: 15, .. })));
    }

    #[test]
    fn corners_of_the_gate_are_fixed() {
        let c = Circuit::new(2, vec![vec![RbsGate::new(0, 1, 0.7f64)]], false).unwrap();
        assert_eq!(apply_full_statevector(&c, 0b00).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(apply_full_statevector(&c, 0b11).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }
}
