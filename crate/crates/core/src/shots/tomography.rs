use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::unary::{load, Circuit, LoaderLayout, RbsGate};

use super::histogram::{mitigate, BitString, Histogram};
use super::sampling::{lane_rng, sample_distribution, unary_outcomes};
use super::ShotPlan;

/// z-score a pair comparison must exceed before its sign relation is trusted.
const LINK_Z: f64 = 5.0;

/// Signed amplitudes recovered from measurements of a unary output state.
#[derive(Debug, Clone, PartialEq)]
pub struct Tomography {
    /// Estimated amplitudes of the (unit-norm) output state.
    pub values: Vec<f64>,
    /// Norm of the input vector; `values * input_norm` estimates `W x`.
    pub input_norm: f64,
    /// Measurement passes run.
    pub passes: usize,
    /// Shots surviving post-selection, summed over passes.
    pub n_used: u64,
    /// Shots fired, summed over passes.
    pub n_total: u64,
}

impl Tomography {
    /// Estimate of `W x` with the input norm restored.
    pub fn rescaled(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.input_norm).collect()
    }
}

/// Prepares the diagonal loader state of `x`, applies `c` and returns the
/// exact output amplitudes together with `‖x‖`.
fn output_state<T: Scalar>(c: &Circuit<T>, x: &[T]) -> Result<(Vec<f64>, f64)> {
    if c.width() != x.len() {
        return Err(Error::WidthMismatch { circuit: c.width(), state: x.len() });
    }
    let (state, norm) = load(x, LoaderLayout::Diagonal)?;
    let out = c.apply(&state)?;
    Ok((out.amps().iter().map(|a| a.as_f64()).collect(), norm.as_f64()))
}

struct Counter<'a> {
    plan: &'a ShotPlan,
    lane: u64,
    used: u64,
    total: u64,
}

impl Counter<'_> {
    /// One measurement pass on lane `self.lane`: frequencies of `e_k` on the
    /// `data` register, optionally after post-selection.
    fn pass(&mut self, outcomes: &[(BitString, f64)], data: std::ops::Range<usize>) -> Result<Histogram> {
        let mut rng = lane_rng(self.plan.rng_seed, self.lane);
        self.lane += 1;
        let hist = sample_distribution(outcomes, self.plan, &mut rng);
        self.total += hist.total();
        let hist = if self.plan.mitigation { mitigate(&hist, data)?.histogram } else { hist };
        self.used += hist.total();
        Ok(hist)
    }

    fn unary_freqs(&mut self, amps: &[f64]) -> Result<Vec<f64>> {
        let n = amps.len();
        let hist = self.pass(&unary_outcomes(amps), 0..n)?;
        let total = hist.total() as f64;
        Ok(hist.unary_counts(0..n).into_iter().map(|c| c as f64 / total).collect())
    }
}

/// Frequencies after appending RBS(π/4) on each `(i, j)` of `pairs`.
fn mixed_freqs(counter: &mut Counter, y: &[f64], pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let mut v = y.to_vec();
    for &(i, j) in pairs {
        RbsGate::new(i, j, FRAC_PI_4).apply(&mut v);
    }
    counter.unary_freqs(&v)
}

/// Relation between the signs of components `i` and `j`, if the pass with
/// RBS(π/4) on `(i, j)` separates `(y_i ± y_j)²/2` clearly enough:
/// `Some(true)` for equal signs.
fn link(p: &[f64], i: usize, j: usize, n_eff: f64) -> Option<bool> {
    let diff = p[i] - p[j];
    let sigma = ((p[i] + p[j]) / n_eff).sqrt();
    (diff.abs() > LINK_Z * sigma && diff.abs() > 0.0).then_some(diff > 0.0)
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// ℓ∞ tomography with sign retrieval through extra RBS(π/4) passes.
///
/// Pass (a) measures magnitudes; passes (b) and (c) mix neighbouring pairs
/// `(0,1),(2,3),…` and `(1,2),(3,4),…` to compare relative signs. When a
/// near-zero component breaks the chain, extra passes mix each disconnected
/// group with the group holding the largest component. Components below the
/// plan's δ are reported as zero; the first surviving component is taken as
/// positive.
pub fn tomography_rbs_pairs<T: Scalar>(c: &Circuit<T>, x: &[T], plan: &ShotPlan) -> Result<Tomography> {
    plan.validate()?;
    let (y, input_norm) = output_state(c, x)?;
    let n = y.len();
    let delta = plan.delta();
    let mut counter = Counter { plan, lane: 0, used: 0, total: 0 };

    let mags: Vec<f64> = counter.unary_freqs(&y)?.into_iter().map(f64::sqrt).collect();
    let significant: Vec<bool> = mags.iter().map(|&m| m >= delta).collect();

    // sign[k] relative to the root of k's group
    let mut parent: Vec<usize> = (0..n).collect();
    let mut rel = vec![true; n];
    let join = |parent: &mut Vec<usize>, rel: &mut Vec<bool>, i: usize, j: usize, same: bool| {
        let (ri, rj) = (find(parent, i), find(parent, j));
        if ri == rj {
            return;
        }
        let flip = (rel[i] == rel[j]) != same;
        for k in 0..n {
            if find(parent, k) == rj && flip {
                rel[k] = !rel[k];
            }
        }
        parent[rj] = ri;
    };

    for offset in [0, 1] {
        let pairs: Vec<(usize, usize)> = (offset..n.saturating_sub(1)).step_by(2).map(|i| (i, i + 1)).collect();
        if pairs.is_empty() {
            continue;
        }
        let before = counter.used;
        let p = mixed_freqs(&mut counter, &y, &pairs)?;
        let n_eff = (counter.used - before) as f64;
        for &(i, j) in &pairs {
            if significant[i] && significant[j] {
                if let Some(same) = link(&p, i, j, n_eff) {
                    join(&mut parent, &mut rel, i, j, same);
                }
            }
        }
    }

    let anchor = (0..n).filter(|&k| significant[k]).max_by(|&a, &b| mags[a].total_cmp(&mags[b]));
    if let Some(anchor) = anchor {
        let mut reps: Vec<usize> = Vec::new();
        for k in (0..n).filter(|&k| significant[k]) {
            let r = find(&mut parent, k);
            if r == find(&mut parent, anchor) {
                continue;
            }
            match reps.iter().position(|&q| find(&mut parent, q) == r) {
                Some(pos) if mags[reps[pos]] >= mags[k] => {}
                Some(pos) => reps[pos] = k,
                None => reps.push(k),
            }
        }
        for rep in reps {
            let before = counter.used;
            let (i, j) = (anchor.min(rep), anchor.max(rep));
            let p = mixed_freqs(&mut counter, &y, &[(i, j)])?;
            let n_eff = (counter.used - before) as f64;
            if let Some(same) = link(&p, i, j, n_eff) {
                join(&mut parent, &mut rel, anchor, rep, same);
            }
        }
    }

    let mut values = vec![0.0; n];
    let mut group_sign: Vec<Option<bool>> = vec![None; n];
    for k in (0..n).filter(|&k| significant[k]) {
        let r = find(&mut parent, k);
        let positive_root = *group_sign[r].get_or_insert(rel[k]);
        values[k] = if rel[k] == positive_root { mags[k] } else { -mags[k] };
    }
    Ok(Tomography { values, input_norm, passes: counter.lane as usize, n_used: counter.used, n_total: counter.total })
}

/// ℓ∞ tomography with one ancilla (qubit 0) and data register `1..=n`.
///
/// The ancilla superposes the branch running `c` on the loaded input with
/// the branch loading the uniform vector `u`; after the final Hadamard the
/// outcome `(a, e_j)` has probability `(y_j ± u_j)²/4`. The branch with the
/// larger count fixes the sign and `2√P − 1/√n` the magnitude.
pub fn tomography_ancilla<T: Scalar>(c: &Circuit<T>, x: &[T], plan: &ShotPlan) -> Result<Tomography> {
    plan.validate()?;
    let (y, input_norm) = output_state(c, x)?;
    let n = y.len();
    let u = 1.0 / (n as f64).sqrt();
    let mut outcomes = Vec::with_capacity(2 * n);
    for (j, &yj) in y.iter().enumerate() {
        for (anc, amp) in [(false, (yj + u) / 2.0), (true, (yj - u) / 2.0)] {
            let mut bits = BitString::zeros(n + 1);
            bits.set(0, anc);
            bits.set(j + 1, true);
            outcomes.push((bits, amp * amp));
        }
    }
    let mut counter = Counter { plan, lane: 0, used: 0, total: 0 };
    let hist = counter.pass(&outcomes, 1..n + 1)?;
    let total = hist.total() as f64;
    let delta = plan.delta();
    let mut values = vec![0.0; n];
    for (j, v) in values.iter_mut().enumerate() {
        let mut bits = BitString::zeros(n + 1);
        bits.set(j + 1, true);
        let p0 = hist.count(&bits) as f64 / total;
        bits.set(0, true);
        let p1 = hist.count(&bits) as f64 / total;
        let (p, sign) = if p0 >= p1 { (p0, 1.0) } else { (p1, -1.0) };
        let mag = (2.0 * p.sqrt() - u).max(0.0);
        *v = if mag >= delta { sign * mag } else { 0.0 };
    }
    Ok(Tomography { values, input_norm, passes: 1, n_used: counter.used, n_total: counter.total })
}
