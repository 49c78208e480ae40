//! Pyramidal orthogonal layers built from nearest-neighbour RBS gates.
//!
//! A square `n × n` pyramid has `2n − 3` timesteps; timestep `t` holds the
//! gates `(i, i+1)` with `i ≡ t (mod 2)`, `i ≤ t` and `i ≤ 2n − 4 − t`.
//! Rectangular layers keep only the gates inside the backward light cone of
//! the last `n_out` qubits. Angles are stored in canonical order
//! (timestep, then top qubit).

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::unary::{load, Circuit, LoaderLayout, RbsGate};

/// Gate positions of a (possibly truncated) pyramid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PyramidLayout {
    n_in: usize,
    n_out: usize,
    /// Top qubit of every gate, per timestep, ascending.
    steps: Vec<Vec<usize>>,
}

impl PyramidLayout {
    pub fn new(n_in: usize, n_out: usize) -> Result<Self> {
        if n_in < 2 {
            return Err(Error::DimensionTooSmall(n_in));
        }
        if n_out == 0 || n_out > n_in {
            return Err(Error::Invalid(format!("output width {n_out} must be in 1..={n_in}")));
        }
        let n = n_in;
        let mut steps: Vec<Vec<usize>> = (0..2 * n - 3)
            .map(|t| (t % 2..=t.min(2 * n - 4 - t)).step_by(2).collect())
            .collect();
        if n_out < n_in {
            // drop gates that cannot reach the output window
            let mut live = vec![false; n];
            live[n - n_out..].iter_mut().for_each(|q| *q = true);
            for step in steps.iter_mut().rev() {
                step.retain(|&i| live[i] || live[i + 1]);
                for &i in step.iter() {
                    live[i] = true;
                    live[i + 1] = true;
                }
            }
            while steps.last().is_some_and(Vec::is_empty) {
                steps.pop();
            }
        }
        Ok(PyramidLayout { n_in, n_out, steps })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn steps(&self) -> &[Vec<usize>] {
        &self.steps
    }

    pub fn gate_count(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    /// Index of the first output qubit.
    pub fn output_offset(&self) -> usize {
        self.n_in - self.n_out
    }

    /// Canonical index of the gate at timestep `t` with top qubit `i`.
    pub fn index_of(&self, t: usize, i: usize) -> Option<usize> {
        let before: usize = self.steps.get(..t)?.iter().map(Vec::len).sum();
        self.steps.get(t)?.iter().position(|&q| q == i).map(|p| before + p)
    }
}

/// Number of free angles of an `n_in → n_out` pyramid: `(2·n_in − 1 − n_out)·n_out / 2`.
pub fn param_count(n_in: usize, n_out: usize) -> usize {
    (2 * n_in - 1 - n_out) * n_out / 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLayer<T> {
    layout: PyramidLayout,
    pub thetas: Vec<T>,
    pub z_flip: bool,
}

impl<T: Scalar> PyramidLayer<T> {
    pub fn new(n_in: usize, n_out: usize, thetas: Vec<T>, z_flip: bool) -> Result<Self> {
        let layout = PyramidLayout::new(n_in, n_out)?;
        if thetas.len() != layout.gate_count() {
            return Err(Error::DimensionMismatch { expected: layout.gate_count(), actual: thetas.len() });
        }
        Ok(PyramidLayer { layout, thetas, z_flip })
    }

    /// All angles zero: the identity (square) or the last-rows projection.
    pub fn identity(n_in: usize, n_out: usize) -> Result<Self> {
        let layout = PyramidLayout::new(n_in, n_out)?;
        let thetas = vec![T::zero(); layout.gate_count()];
        Ok(PyramidLayer { layout, thetas, z_flip: false })
    }

    /// Angles of a Haar-random rotation of `R^n_in`; rectangular layers keep
    /// the angles of the surviving gates, so their matrix is the last `n_out`
    /// rows of that rotation.
    pub fn random<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Result<Self> {
        let layout = PyramidLayout::new(n_in, n_out)?;
        let tol = T::lit(DECOMPOSE_TOL).max(T::lit(1e3) * T::epsilon());
        let square = decompose(&linalg::haar_special_orthogonal::<T, R>(n_in, rng), tol)?;
        let thetas = square
            .gates()
            .filter(|&(t, i, _)| layout.index_of(t, i).is_some())
            .map(|(_, _, th)| th)
            .collect();
        Ok(PyramidLayer { layout, thetas, z_flip: false })
    }

    /// `PYRAMID <n_in> <n_out> <zflip>` followed by one line of angles.
    pub fn to_text(&self) -> String {
        let angles: Vec<String> = self.thetas.iter().map(|th| format!("{th:.16e}")).collect();
        format!("PYRAMID {} {} {}\n{}\n", self.n_in(), self.n_out(), u8::from(self.z_flip), angles.join(" "))
    }

    /// Parses the two lines written by [`PyramidLayer::to_text`]; `line` is
    /// the 1-based line number of the header, for error messages.
    pub fn from_text_lines(header: &str, angles: &str, line: usize) -> Result<Self> {
        let bad = |msg: String| Error::Parse { line, msg };
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 4 || f[0] != "PYRAMID" {
            return Err(bad(format!("expected 'PYRAMID <n_in> <n_out> <zflip>', found '{header}'")));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("'{s}' is not a non-negative integer")));
        let (n_in, n_out) = (num(f[1])?, num(f[2])?);
        let z_flip = match f[3] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("zflip must be 0 or 1, found '{other}'"))),
        };
        let thetas = angles
            .split_whitespace()
            .map(|a| a.parse::<T>().map_err(|_| Error::Parse { line: line + 1, msg: format!("bad angle '{a}'") }))
            .collect::<Result<Vec<T>>>()?;
        PyramidLayer::new(n_in, n_out, thetas, z_flip).map_err(|e| bad(e.to_string()))
    }

    pub fn layout(&self) -> &PyramidLayout {
        &self.layout
    }

    pub fn n_in(&self) -> usize {
        self.layout.n_in
    }

    pub fn n_out(&self) -> usize {
        self.layout.n_out
    }

    /// Iterates `(timestep, top qubit, angle)` in canonical order.
    pub fn gates(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.layout
            .steps
            .iter()
            .enumerate()
            .flat_map(|(t, step)| step.iter().map(move |&i| (t, i)))
            .zip(self.thetas.iter())
            .map(|((t, i), &th)| (t, i, th))
    }

    /// Rotates a full-width coordinate vector in place (no normalization).
    pub fn apply_in_place(&self, v: &mut [T]) {
        debug_assert_eq!(v.len(), self.n_in());
        for (_, i, th) in self.gates() {
            RbsGate::new(i, i + 1, th).apply(v);
        }
        if self.z_flip {
            let last = v.len() - 1;
            v[last] = -v[last];
        }
    }

    /// `W·x` without the loader round trip; linear in `x`.
    pub fn apply_linear(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_in() {
            return Err(Error::DimensionMismatch { expected: self.n_in(), actual: x.len() });
        }
        let mut v = x.to_vec();
        self.apply_in_place(&mut v);
        Ok(v.split_off(self.layout.output_offset()))
    }
}

/// The layer as an RBS circuit of width `n_in`.
pub fn pyramid_circuit<T: Scalar>(layer: &PyramidLayer<T>) -> Circuit<T> {
    let mut timesteps: Vec<Vec<RbsGate<T>>> = vec![Vec::new(); layer.layout.steps.len()];
    for (t, i, th) in layer.gates() {
        timesteps[t].push(RbsGate::new(i, i + 1, th));
    }
    Circuit::new(layer.n_in(), timesteps, layer.z_flip).expect("pyramid gates are disjoint per timestep")
}

/// `W·x` by loading `x/‖x‖` with the diagonal loader, running the pyramid
/// and rescaling the last `n_out` amplitudes by `‖x‖`.
pub fn forward<T: Scalar>(layer: &PyramidLayer<T>, x: &[T]) -> Result<Vec<T>> {
    if x.len() != layer.n_in() {
        return Err(Error::DimensionMismatch { expected: layer.n_in(), actual: x.len() });
    }
    let (state, norm) = load(x, LoaderLayout::Diagonal)?;
    let out = pyramid_circuit(layer).apply(&state)?;
    Ok(out.amps()[layer.layout.output_offset()..].iter().map(|&a| a * norm).collect())
}

/// `n_out × n_in` matrix with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoMatrix<T: Scalar> {
    entries: DMatrix<T>,
}

impl<T: Scalar> OrthoMatrix<T> {
    /// Checks row orthonormality to `tol`.
    pub fn new(entries: DMatrix<T>, tol: T) -> Result<Self> {
        let defect = linalg::row_defect(&entries);
        if !(defect <= tol) {
            return Err(Error::NotOrthogonal { defect: defect.as_f64() });
        }
        Ok(OrthoMatrix { entries })
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.entries
    }

    pub fn defect(&self) -> T {
        linalg::row_defect(&self.entries)
    }
}

/// Matrix of the layer, one forward pass per basis vector.
pub fn extract_matrix<T: Scalar>(layer: &PyramidLayer<T>) -> OrthoMatrix<T> {
    let n = layer.n_in();
    let off = layer.layout.output_offset();
    let mut w = DMatrix::zeros(layer.n_out(), n);
    let mut v = vec![T::zero(); n];
    for j in 0..n {
        v.iter_mut().for_each(|a| *a = T::zero());
        v[j] = T::one();
        layer.apply_in_place(&mut v);
        for r in 0..layer.n_out() {
            w[(r, j)] = v[off + r];
        }
    }
    OrthoMatrix { entries: w }
}

/// Default orthogonality tolerance accepted by [`decompose`].
pub const DECOMPOSE_TOL: f64 = 1e-8;

/// Recovers square pyramid angles from an orthogonal matrix.
///
/// Columns are processed right to left. Column `k+1` of the remaining
/// factor fixes the `k+1` gates on the pyramid diagonal ending at pair
/// `(k, k+1)`, solved bottom to top with one unknown angle per step; the
/// diagonal is then peeled off. Matrices with determinant −1 get `z_flip`
/// and their last row negated first.
pub fn decompose<T: Scalar>(m: &DMatrix<T>, tol: T) -> Result<PyramidLayer<T>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::NotSquare { rows: n, cols: m.ncols() });
    }
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let defect = linalg::col_defect(m);
    if !(defect < tol) {
        return Err(Error::NotOrthogonal { defect: defect.as_f64() });
    }
    let mut work = m.clone();
    let z_flip = m.clone().determinant() < T::zero();
    if z_flip {
        work.row_mut(n - 1).neg_mut();
    }
    let layout = PyramidLayout::new(n, n)?;
    let mut thetas = vec![T::zero(); layout.gate_count()];
    for k in (0..n - 1).rev() {
        let col = k + 1;
        // mass[i] = ‖work[0..=i, col]‖
        let mut mass = vec![T::zero(); k + 1];
        let mut acc = T::zero();
        for (i, m_i) in mass.iter_mut().enumerate() {
            acc += work[(i, col)] * work[(i, col)];
            *m_i = acc.sqrt();
        }
        for i in (0..=k).rev() {
            let upper = if i == 0 { work[(0, col)] } else { mass[i] };
            let theta = upper.atan2(work[(i + 1, col)]);
            let idx = layout.index_of(2 * k - i, i).expect("diagonal gate exists");
            thetas[idx] = theta;
        }
        // peel the diagonal: work ← D_kᵀ · work, with D_k = G_0 ⋯ G_k
        for i in 0..=k {
            let theta = thetas[layout.index_of(2 * k - i, i).unwrap()];
            let (c, s) = theta.cos_sin();
            for j in 0..n {
                let a = work[(i, j)];
                let b = work[(i + 1, j)];
                work[(i, j)] = c * a - s * b;
                work[(i + 1, j)] = s * a + c * b;
            }
        }
    }
    Ok(PyramidLayer { layout, thetas, z_flip })
}
