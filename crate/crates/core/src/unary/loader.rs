//! Unary data loaders: classical angle preprocessing and the three circuit layouts.
//!
//! Every loader starts from `e_0` (an X gate on the first qubit) and moves
//! amplitude mass down a binary splitting tree. A gate `(src, dst)` with
//! loading angle `α` maps `e_src ↦ cos α·e_src + sin α·e_dst`; in the shared
//! RBS convention that is the gate `(src, dst)` with `θ = −α`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::circuit::Circuit;
use super::gate::RbsGate;
use super::state::UnaryState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoaderLayout {
    /// Cascade `(0,1), (1,2), …`; depth `n − 1`.
    Diagonal,
    /// One split gate `(0, ⌈n/2⌉)` followed by two cascades run in parallel; depth `⌈n/2⌉`.
    SemiDiagonal,
    /// Balanced binary tree; depth `⌈log₂ n⌉`.
    Parallel,
}

impl LoaderLayout {
    pub const ALL: [LoaderLayout; 3] =
        [LoaderLayout::Diagonal, LoaderLayout::SemiDiagonal, LoaderLayout::Parallel];
}

impl fmt::Display for LoaderLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoaderLayout::Diagonal => "diagonal",
            LoaderLayout::SemiDiagonal => "semi_diagonal",
            LoaderLayout::Parallel => "parallel",
        })
    }
}

impl FromStr for LoaderLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(LoaderLayout::Diagonal),
            "semi_diagonal" | "semi-diagonal" | "semidiagonal" => Ok(LoaderLayout::SemiDiagonal),
            "parallel" => Ok(LoaderLayout::Parallel),
            other => Err(Error::Invalid(format!("unknown loader layout '{other}'"))),
        }
    }
}

/// Precomputed loader angles, in gate order (timestep, then top qubit).
#[derive(Debug, Clone, PartialEq)]
pub struct LoaderAngles<T> {
    pub alphas: Vec<T>,
    /// ℓ2 norm of the input; the loaded state is always unit norm.
    pub norm: T,
}

/// Mass-flow pairs `(src, dst)` per timestep, sorted by source qubit.
pub fn loader_schedule(n: usize, layout: LoaderLayout) -> Vec<Vec<(usize, usize)>> {
    match layout {
        LoaderLayout::Diagonal => (0..n.saturating_sub(1)).map(|k| vec![(k, k + 1)]).collect(),
        LoaderLayout::SemiDiagonal => {
            let m = n.div_ceil(2);
            let mut steps = vec![vec![(0, m)]];
            for t in 1..m {
                let mut step = vec![(t - 1, t)];
                if m + t < n {
                    step.push((m + t - 1, m + t));
                }
                steps.push(step);
            }
            steps
        }
        LoaderLayout::Parallel => {
            let mut steps: Vec<Vec<(usize, usize)>> = Vec::new();
            split_range(0, n, 0, &mut steps);
            for step in &mut steps {
                step.sort_unstable();
            }
            steps
        }
    }
}

fn split_range(lo: usize, hi: usize, depth: usize, steps: &mut Vec<Vec<(usize, usize)>>) {
    let size = hi - lo;
    if size < 2 {
        return;
    }
    let mid = lo + size.div_ceil(2);
    if steps.len() <= depth {
        steps.push(Vec::new());
    }
    steps[depth].push((lo, mid));
    split_range(lo, mid, depth + 1, steps);
    split_range(mid, hi, depth + 1, steps);
}

/// For every gate of the schedule (in gate order), the contiguous index
/// ranges kept by the source and handed to the destination.
fn split_ranges(n: usize, schedule: &[Vec<(usize, usize)>]) -> Vec<((usize, usize), (usize, usize))> {
    let mut cover: Vec<(usize, usize)> = (0..n).map(|q| (q, q + 1)).collect();
    let mut out = Vec::new();
    for step in schedule.iter().rev() {
        for &(src, dst) in step.iter().rev() {
            let kept = cover[src];
            let handed = cover[dst];
            debug_assert_eq!(kept.1, handed.0, "loader subtrees must be contiguous");
            out.push((kept, handed));
            cover[src] = (kept.0, handed.1);
        }
    }
    out.reverse();
    out
}

/// Computes the `n − 1` loading angles for `x` in the given layout.
///
/// Each gate splits the mass of its subtree; a single-coordinate side carries
/// its signed value instead of a norm, so arbitrary real vectors load exactly.
/// Zero-mass subtrees get angle 0.
pub fn compute_loader_angles<T: Scalar>(x: &[T], layout: LoaderLayout) -> Result<LoaderAngles<T>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let norm = crate::scalar::norm2(x);
    if norm == T::zero() {
        return Err(Error::ZeroVector);
    }
    let schedule = loader_schedule(n, layout);
    let side = |(lo, hi): (usize, usize)| -> T {
        if hi - lo == 1 {
            x[lo]
        } else {
            crate::scalar::norm2(&x[lo..hi])
        }
    };
    let alphas = split_ranges(n, &schedule)
        .into_iter()
        .map(|(kept, handed)| side(handed).atan2(side(kept)))
        .collect();
    Ok(LoaderAngles { alphas, norm })
}

/// Builds the loader circuit of `width` qubits from precomputed angles.
pub fn build_loader<T: Scalar>(angles: &LoaderAngles<T>, width: usize, layout: LoaderLayout) -> Result<Circuit<T>> {
    if width < 2 {
        return Err(Error::DimensionTooSmall(width));
    }
    if angles.alphas.len() != width - 1 {
        return Err(Error::LayoutMismatch { expected: width - 1, actual: angles.alphas.len() });
    }
    let mut alphas = angles.alphas.iter();
    let timesteps = loader_schedule(width, layout)
        .into_iter()
        .map(|step| {
            step.into_iter()
                .map(|(src, dst)| RbsGate::new(src, dst, -*alphas.next().expect("angle count checked")))
                .collect()
        })
        .collect();
    Circuit::new(width, timesteps, false)
}

/// Convenience: angles and circuit for `x` in one call.
pub fn loader_circuit<T: Scalar>(x: &[T], layout: LoaderLayout) -> Result<(Circuit<T>, T)> {
    let angles = compute_loader_angles(x, layout)?;
    let c = build_loader(&angles, x.len(), layout)?;
    Ok((c, angles.norm))
}

/// Runs the loader on `e_0`, returning the encoded unit vector.
pub fn load<T: Scalar>(x: &[T], layout: LoaderLayout) -> Result<(UnaryState<T>, T)> {
    let (c, norm) = loader_circuit(x, layout)?;
    let start = UnaryState::basis(x.len(), 0)?;
    Ok((c.apply(&start)?, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::max_abs_diff;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn basis_vector_gives_zero_angles() {
        let a = compute_loader_angles(&[1.0, 0.0, 0.0, 0.0], LoaderLayout::Diagonal).unwrap();
        assert_eq!(a.alphas, vec![0.0, 0.0, 0.0]);
        assert_eq!(a.norm, 1.0);
    }

    #[test]
    fn two_equal_components_diagonal() {
        let h = 0.5f64.sqrt();
        let a = compute_loader_angles(&[h, h, 0.0, 0.0], LoaderLayout::Diagonal).unwrap();
        assert!((a.alphas[0] - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(&a.alphas[1..], &[0.0, 0.0]);
    }

    #[test]
    fn diagonal_angles_follow_arccos_recursion_for_positive_inputs() {
        let x = [0.1f64, 0.5, 0.3, 0.7, 0.4];
        let n = crate::scalar::norm2(&x);
        let u: Vec<f64> = x.iter().map(|v| v / n).collect();
        let a = compute_loader_angles(&x, LoaderLayout::Diagonal).unwrap();
        let mut prod = 1.0;
        for k in 0..u.len() - 2 {
            let expected = (u[k] / prod).acos();
            assert!((a.alphas[k] - expected).abs() < 1e-12, "angle {k}");
            prod *= expected.sin();
        }
    }

    #[test]
    fn uniform_vector_round_trips() {
        for layout in LoaderLayout::ALL {
            let (s, norm) = load(&[0.5f64, 0.5, 0.5, 0.5], layout).unwrap();
            assert!((norm - 1.0).abs() < 1e-15);
            assert!(max_abs_diff(s.amps(), &[0.5; 4]) < 1e-10, "{layout}");
        }
    }

    #[test]
    fn signed_and_sparse_vectors_round_trip() {
        let cases: [&[f64]; 4] = [
            &[-1.0, 2.0, 0.0, -3.0, 0.5],
            &[0.0, 0.0, 0.0, -2.0],
            &[0.0, -1.0],
            &[3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0],
        ];
        for x in cases {
            let n = crate::scalar::norm2(x);
            let u: Vec<f64> = x.iter().map(|v| v / n).collect();
            for layout in LoaderLayout::ALL {
                let (s, norm) = load(x, layout).unwrap();
                assert!((norm - n).abs() < 1e-12);
                assert!(max_abs_diff(s.amps(), &u) < 1e-12, "{x:?} {layout}");
            }
        }
    }

    #[test]
    fn depths_and_gate_counts() {
        let angles = LoaderAngles { alphas: vec![0.1f64; 7], norm: 1.0 };
        let diag = build_loader(&angles, 8, LoaderLayout::Diagonal).unwrap();
        assert_eq!((diag.gate_count(), diag.depth()), (7, 7));
        let pairs: Vec<(usize, usize)> = diag.gates().map(|g| (g.i, g.j)).collect();
        assert_eq!(pairs, (0..7).map(|k| (k, k + 1)).collect::<Vec<_>>());
        let par = build_loader(&angles, 8, LoaderLayout::Parallel).unwrap();
        assert_eq!((par.gate_count(), par.depth()), (7, 3));
        let semi = build_loader(&angles, 8, LoaderLayout::SemiDiagonal).unwrap();
        assert_eq!((semi.gate_count(), semi.depth()), (7, 4));
        for n in 2..40usize {
            let a = LoaderAngles { alphas: vec![0.0f64; n - 1], norm: 1.0 };
            let depth_of = |l| build_loader(&a, n, l).unwrap().depth();
            assert_eq!(depth_of(LoaderLayout::Diagonal), n - 1);
            assert_eq!(depth_of(LoaderLayout::SemiDiagonal), n.div_ceil(2));
            assert_eq!(depth_of(LoaderLayout::Parallel), (n as f64).log2().ceil() as usize);
        }
    }

    #[test]
    fn two_qubit_loader_is_one_gate() {
        for layout in LoaderLayout::ALL {
            let (c, _) = loader_circuit(&[0.3f64, 0.4], layout).unwrap();
            assert_eq!((c.gate_count(), c.depth()), (1, 1));
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(compute_loader_angles(&[0.0f64; 3], LoaderLayout::Diagonal), Err(Error::ZeroVector)));
        assert!(matches!(compute_loader_angles(&[1.0f64], LoaderLayout::Diagonal), Err(Error::DimensionTooSmall(1))));
        let a = LoaderAngles { alphas: vec![0.0f64; 3], norm: 1.0 };
        assert!(matches!(
            build_loader(&a, 5, LoaderLayout::Parallel),
            Err(Error::LayoutMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn layout_names_parse() {
        for l in LoaderLayout::ALL {
            assert_eq!(l.to_string().parse::<LoaderLayout>().unwrap(), l);
        }
        assert!("tree".parse::<LoaderLayout>().is_err());
    }
}
