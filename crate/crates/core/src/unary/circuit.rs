use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::gate::RbsGate;
use super::state::UnaryState;

/// Layered RBS circuit with an optional Z gate on the last qubit at the end.
///
/// Gates inside one timestep act on pairwise-disjoint qubits, so their order
/// within the timestep is irrelevant. Timesteps are kept sorted by top qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T> {
    width: usize,
    timesteps: Vec<Vec<RbsGate<T>>>,
    z_flip: bool,
}

impl<T: Scalar> Circuit<T> {
    pub fn new(width: usize, timesteps: Vec<Vec<RbsGate<T>>>, z_flip: bool) -> Result<Self> {
        let mut timesteps = timesteps;
        let mut used = vec![usize::MAX; width];
        for (t, step) in timesteps.iter_mut().enumerate() {
            for g in step.iter() {
                if g.i == g.j || g.i >= width || g.j >= width {
                    return Err(Error::InvalidGate(g.i, g.j, width));
                }
                for q in [g.i, g.j] {
                    if used[q] == t {
                        return Err(Error::OverlappingGates(q));
                    }
                    used[q] = t;
                }
            }
            step.sort_by_key(|g| g.top());
        }
        Ok(Circuit { width, timesteps, z_flip })
    }

    pub fn empty(width: usize) -> Self {
        Circuit { width, timesteps: Vec::new(), z_flip: false }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.timesteps.len()
    }

    pub fn z_flip(&self) -> bool {
        self.z_flip
    }

    pub fn timesteps(&self) -> &[Vec<RbsGate<T>>] {
        &self.timesteps
    }

    pub fn gate_count(&self) -> usize {
        self.timesteps.iter().map(Vec::len).sum()
    }

    /// Gates in execution order (timestep, then top qubit).
    pub fn gates(&self) -> impl Iterator<Item = &RbsGate<T>> {
        self.timesteps.iter().flatten()
    }

    /// Appends `other` after `self`; both must have the same width and `self`
    /// must not end in a Z gate.
    pub fn then(&self, other: &Circuit<T>) -> Result<Self> {
        if self.width != other.width {
            return Err(Error::WidthMismatch { circuit: self.width, state: other.width });
        }
        if self.z_flip {
            return Err(Error::Invalid("cannot append after a final Z gate".into()));
        }
        let mut timesteps = self.timesteps.clone();
        timesteps.extend(other.timesteps.iter().cloned());
        Ok(Circuit { width: self.width, timesteps, z_flip: other.z_flip })
    }

    /// Inverse circuit: reversed timesteps with negated angles.
    pub fn adjoint(&self) -> Result<Self> {
        if self.z_flip {
            return Err(Error::Invalid("adjoint of a circuit ending in Z is not representable".into()));
        }
        let timesteps = self
            .timesteps
            .iter()
            .rev()
            .map(|step| step.iter().map(RbsGate::inverse).collect())
            .collect();
        Ok(Circuit { width: self.width, timesteps, z_flip: false })
    }

    /// Embeds the circuit into a wider register, shifting every qubit by `offset`.
    pub fn embed(&self, width: usize, offset: usize) -> Result<Self> {
        if offset + self.width > width {
            return Err(Error::WidthMismatch { circuit: self.width + offset, state: width });
        }
        if self.z_flip && offset + self.width != width {
            return Err(Error::Invalid("Z gate must stay on the last qubit".into()));
        }
        let timesteps = self
            .timesteps
            .iter()
            .map(|step| {
                step.iter()
                    .map(|g| RbsGate::new(g.i + offset, g.j + offset, g.theta))
                    .collect()
            })
            .collect();
        Ok(Circuit { width, timesteps, z_flip: self.z_flip })
    }

    /// Applies every rotation to raw coordinates, without norm checks.
    pub fn apply_in_place(&self, v: &mut [T]) {
        debug_assert_eq!(v.len(), self.width);
        for g in self.gates() {
            g.apply(v);
        }
        if self.z_flip {
            let last = self.width - 1;
            v[last] = -v[last];
        }
    }

    pub fn apply(&self, s: &UnaryState<T>) -> Result<UnaryState<T>> {
        apply_circuit(self, s)
    }

    /// Line-oriented text form: `WIDTH n`, one `RBS i j θ` per gate,
    /// `---` between timesteps and an optional trailing `ZFLIP`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "WIDTH {}", self.width).unwrap();
        for (t, step) in self.timesteps.iter().enumerate() {
            if t > 0 {
                out.push_str("---\n");
            }
            for g in step {
                writeln!(out, "RBS {} {} {:.16e}", g.i, g.j, g.theta).unwrap();
            }
        }
        if self.z_flip {
            out.push_str("ZFLIP\n");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut width = None;
        let mut timesteps: Vec<Vec<RbsGate<T>>> = Vec::new();
        let mut current: Vec<RbsGate<T>> = Vec::new();
        let mut started = false;
        let mut z_flip = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
            if z_flip {
                return Err(perr("ZFLIP must be the last line"));
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("WIDTH") => {
                    if width.is_some() {
                        return Err(perr("duplicate WIDTH header"));
                    }
                    let n = parts
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| perr("bad WIDTH"))?;
                    width = Some(n);
                }
                Some("RBS") => {
                    if width.is_none() {
                        return Err(perr("RBS before WIDTH header"));
                    }
                    let i = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| perr("bad qubit index"))?;
                    let j = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| perr("bad qubit index"))?;
                    let theta = parts
                        .next()
                        .and_then(|s| s.parse::<T>().ok())
                        .ok_or_else(|| perr("bad angle"))?;
                    if parts.next().is_some() {
                        return Err(perr("trailing tokens"));
                    }
                    current.push(RbsGate::new(i, j, theta));
                    started = true;
                }
                Some("---") => {
                    timesteps.push(std::mem::take(&mut current));
                    started = true;
                }
                Some("ZFLIP") => z_flip = true,
                _ => return Err(perr("unrecognized line")),
            }
        }
        if started {
            timesteps.push(current);
        }
        let width = width.ok_or(Error::Parse { line: 0, msg: "missing WIDTH header".into() })?;
        Circuit::new(width, timesteps, z_flip)
    }
}

/// Applies `c` to a unary state by replacing each gate with its planar rotation.
pub fn apply_circuit<T: Scalar>(c: &Circuit<T>, s: &UnaryState<T>) -> Result<UnaryState<T>> {
    if c.width() != s.dim() {
        return Err(Error::WidthMismatch { circuit: c.width(), state: s.dim() });
    }
    let mut v = s.amps().to_vec();
    c.apply_in_place(&mut v);
    Ok(UnaryState::from_raw(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::max_abs_diff;

    fn sample() -> Circuit<f64> {
        Circuit::new(
            4,
            vec![
                vec![RbsGate::new(2, 3, -0.25), RbsGate::new(0, 1, 0.5)],
                vec![RbsGate::new(1, 2, 1.0 / 3.0)],
            ],
            true,
        )
        .unwrap()
    }

    #[test]
    fn rejects_overlapping_and_invalid_gates() {
        let overlap = Circuit::new(3, vec![vec![RbsGate::new(0, 1, 0.1), RbsGate::new(1, 2, 0.1)]], false);
        assert!(matches!(overlap, Err(Error::OverlappingGates(1))));
        let bad = Circuit::new(3, vec![vec![RbsGate::new(0, 3, 0.1)]], false);
        assert!(matches!(bad, Err(Error::InvalidGate(0, 3, 3))));
        let same = Circuit::new(3, vec![vec![RbsGate::new(1, 1, 0.1)]], false);
        assert!(same.is_err());
    }

    #[test]
    fn zero_angles_are_identity() {
        let c = Circuit::new(3, vec![vec![RbsGate::new(0, 1, 0.0)], vec![RbsGate::new(1, 2, 0.0)]], false).unwrap();
        let s = UnaryState::new(vec![0.6, 0.0, -0.8]).unwrap();
        assert_eq!(apply_circuit(&c, &s).unwrap(), s);
    }

    #[test]
    fn width_mismatch_is_reported() {
        let s = UnaryState::<f64>::basis(3, 0).unwrap();
        assert!(matches!(apply_circuit(&sample(), &s), Err(Error::WidthMismatch { .. })));
    }

    #[test]
    fn z_flip_negates_last_amplitude() {
        let c = Circuit::<f64>::new(2, vec![], true).unwrap();
        let s = UnaryState::new(vec![0.6, 0.8]).unwrap();
        assert_eq!(apply_circuit(&c, &s).unwrap().amps(), &[0.6, -0.8]);
    }

    #[test]
    fn adjoint_inverts() {
        let mut c = sample();
        c.z_flip = false;
        let s = UnaryState::new(vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let back = c.adjoint().unwrap().apply(&c.apply(&s).unwrap()).unwrap();
        assert!(max_abs_diff(back.amps(), s.amps()) < 1e-15);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let c = sample();
        let text = c.to_text();
        assert!(text.starts_with("WIDTH 4\nRBS 0 1 5.0000000000000000e-1\n"));
        assert!(text.ends_with("ZFLIP\n"));
        assert_eq!(Circuit::<f64>::from_text(&text).unwrap(), c);
    }

    #[test]
    fn text_parse_errors_carry_line_numbers() {
        let err = Circuit::<f64>::from_text("WIDTH 2\nRBS 0 x 0.1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(Circuit::<f64>::from_text("RBS 0 1 0.1\n").is_err());
        assert!(Circuit::<f64>::from_text("WIDTH 2\nZFLIP\nRBS 0 1 0.1\n").is_err());
        let empty = Circuit::<f64>::from_text("WIDTH 5\n").unwrap();
        assert_eq!(empty.depth(), 0);
    }
}
