use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};
use crate::unary::{loader_circuit, Circuit, LoaderLayout, RbsGate, UnaryState};

use super::histogram::{mitigate, BitString, Histogram};
use super::sampling::{lane_rng, sample_distribution, unary_outcomes};
use super::{Estimate, ShotPlan};

const NORM_TOL: f64 = 1e-8;

fn check_pair<T: Scalar>(x: &[T], w: &[T]) -> Result<()> {
    if x.len() != w.len() {
        return Err(Error::LengthMismatch(x.len(), w.len()));
    }
    if x.len() < 2 {
        return Err(Error::DimensionTooSmall(x.len()));
    }
    for v in [x, w] {
        let norm = norm2(v).as_f64();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NormError { norm });
        }
    }
    Ok(())
}

/// Semi-diagonal loader for `x` followed by the adjoint loader for `w`.
/// Starting from `e_0`, the amplitude left on `e_0` is `w·x`.
pub fn square_ip_circuit<T: Scalar>(x: &[T], w: &[T]) -> Result<Circuit<T>> {
    let (lx, _) = loader_circuit(x, LoaderLayout::SemiDiagonal)?;
    let (lw, _) = loader_circuit(w, LoaderLayout::SemiDiagonal)?;
    lx.then(&lw.adjoint()?)
}

/// Width `n + 1` circuit with an ancilla on qubit 0: RBS(π/4) between the
/// ancilla and the first data qubit, the square inner-product circuit on the
/// data qubits, then RBS(π/4) again. The amplitude of `e_0` (ancilla set,
/// data register empty) is `(1 − w·x)/2`.
pub fn signed_ip_circuit<T: Scalar>(x: &[T], w: &[T]) -> Result<Circuit<T>> {
    let n = x.len();
    let core = square_ip_circuit(x, w)?.embed(n + 1, 1)?;
    let mix = Circuit::new(n + 1, vec![vec![RbsGate::new(0, 1, T::lit(FRAC_PI_4))]], false)?;
    mix.then(&core)?.then(&mix)
}

/// Frequency of `target`, optionally after post-selection on `data`.
fn frequency(hist: &Histogram, target: &BitString, data: std::ops::Range<usize>, plan: &ShotPlan) -> Result<(f64, u64)> {
    if plan.mitigation {
        let m = mitigate(hist, data)?;
        let used = m.histogram.total();
        Ok((m.histogram.count(target) as f64 / used as f64, used))
    } else {
        let total = hist.total();
        Ok((hist.count(target) as f64 / total as f64, total))
    }
}

fn run<T: Scalar>(c: &Circuit<T>, plan: &ShotPlan) -> Result<Histogram> {
    plan.validate()?;
    let out = c.apply(&UnaryState::basis(c.width(), 0)?)?;
    let mut rng = lane_rng(plan.rng_seed, 0);
    Ok(sample_distribution(&unary_outcomes(out.amps()), plan, &mut rng))
}

/// Estimates `(w·x)²` as the frequency of reading back `e_0`.
pub fn square_ip_estimate<T: Scalar>(x: &[T], w: &[T], plan: &ShotPlan) -> Result<Estimate> {
    check_pair(x, w)?;
    let c = square_ip_circuit(x, w)?;
    let hist = run(&c, plan)?;
    let n = x.len();
    let (p, used) = frequency(&hist, &BitString::unary(n, 0), 0..n, plan)?;
    Ok(Estimate { value: p, n_used: used, n_total: plan.n_shots })
}

/// Estimates the signed inner product `w·x = 1 − 2√p`, where `p` is the
/// frequency of the ancilla-only outcome; clamped to `[−1, 1]`.
pub fn signed_ip_estimate<T: Scalar>(x: &[T], w: &[T], plan: &ShotPlan) -> Result<Estimate> {
    check_pair(x, w)?;
    let c = signed_ip_circuit(x, w)?;
    let hist = run(&c, plan)?;
    let width = x.len() + 1;
    let (p, used) = frequency(&hist, &BitString::unary(width, 0), 0..width, plan)?;
    let value = (1.0 - 2.0 * p.sqrt()).clamp(-1.0, 1.0);
    Ok(Estimate { value, n_used: used, n_total: plan.n_shots })
}

/// Rows of the estimate log CSV: `name,value,n_used,n_total,seed`.
#[derive(Debug, Default)]
pub struct EstimateLog {
    rows: Vec<(String, Estimate, u64)>,
}

impl EstimateLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, est: Estimate, seed: u64) {
        self.rows.push((name.into(), est, seed));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["name", "value", "n_used", "n_total", "seed"])?;
        for (name, e, seed) in &self.rows {
            wr.write_record([
                name.clone(),
                format!("{:.16e}", e.value),
                e.n_used.to_string(),
                e.n_total.to_string(),
                seed.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm2(&v);
        v.into_iter().map(|a| a / norm).collect()
    }

    #[test]
    fn exact_amplitudes_of_both_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3, 5, 8] {
            let x = unit(&mut rng, n);
            let w = unit(&mut rng, n);
            let d = dot(&x, &w);
            let sq = square_ip_circuit(&x, &w).unwrap().apply(&UnaryState::basis(n, 0).unwrap()).unwrap();
            assert!((sq.amps()[0] - d).abs() < 1e-12);
            let sg = signed_ip_circuit(&x, &w).unwrap().apply(&UnaryState::basis(n + 1, 0).unwrap()).unwrap();
            assert!((sg.amps()[0] - (0.5 - 0.5 * d)).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_and_orthogonal_vectors() {
        let plan = ShotPlan::new(2000, 3).unwrap();
        let x = [0.6, 0.0, 0.8, 0.0];
        let y = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(square_ip_estimate(&x, &x, &plan).unwrap().value, 1.0);
        assert_eq!(square_ip_estimate(&x, &y, &plan).unwrap().value, 0.0);
        assert_eq!(signed_ip_estimate(&x, &x, &plan).unwrap().value, 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(signed_ip_estimate(&x, &neg, &plan).unwrap().value, -1.0);
    }

    #[test]
    fn rejects_unnormalized_inputs() {
        let plan = ShotPlan::new(10, 0).unwrap();
        assert!(matches!(square_ip_estimate(&[1.0, 1.0], &[1.0, 0.0], &plan), Err(Error::NormError { .. })));
        assert!(matches!(signed_ip_estimate(&[1.0, 0.0], &[1.0, 0.0, 0.0], &plan), Err(Error::LengthMismatch(2, 3))));
    }

    #[test]
    fn square_estimate_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut inside = 0;
        for seed in 0..500u64 {
            let x = unit(&mut rng, 8);
            let w = unit(&mut rng, 8);
            let truth = dot(&x, &w).powi(2);
            let est = square_ip_estimate(&x, &w, &ShotPlan::new(10_000, seed).unwrap()).unwrap();
            if (est.value - truth).abs() < 0.05 {
                inside += 1;
            }
        }
        assert!(inside >= 495, "{inside}/500");
    }

    #[test]
    fn signed_estimate_mean_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut total = 0.0;
        for seed in 0..500u64 {
            let x = unit(&mut rng, 8);
            let w = unit(&mut rng, 8);
            let est = signed_ip_estimate(&x, &w, &ShotPlan::new(10_000, seed).unwrap()).unwrap();
            total += (est.value - dot(&x, &w)).abs();
        }
        assert!(total / 500.0 < 0.02);
    }

    #[test]
    fn mitigation_reports_used_shots() {
        let x = [0.6, 0.8, 0.0];
        let plan = ShotPlan::new(4000, 1).unwrap().with_noise(0.05).unwrap().with_mitigation(true);
        let e = square_ip_estimate(&x, &x, &plan).unwrap();
        assert!(e.n_used < e.n_total);
        assert!(e.value > 0.95);
        let clean = ShotPlan::new(4000, 1).unwrap().with_mitigation(true);
        let e = signed_ip_estimate(&x, &x, &clean).unwrap();
        assert_eq!(e.n_used, e.n_total);
    }

    #[test]
    fn log_csv() {
        let mut log = EstimateLog::new();
        log.push("signed", Estimate { value: 0.5, n_used: 9, n_total: 10 }, 7);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "name,value,n_used,n_total,seed\nsigned,5.0000000000000000e-1,9,10,7\n"
        );
    }
}
