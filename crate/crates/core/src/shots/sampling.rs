use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::unary::{Circuit, UnaryState};

use super::histogram::{BitString, Histogram};
use super::ShotPlan;

/// RNG for lane `lane` of a run seeded with `seed`.
pub fn lane_rng(seed: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng
}

/// Draws `plan.n_shots` outcomes from `outcomes` (bitstring, probability),
/// then applies measurement bit flips if the plan has noise.
///
/// Counts per ideal outcome are drawn as a multinomial through sequential
/// binomials; flips are then drawn per shot and per qubit.
pub fn sample_distribution<R: Rng + ?Sized>(outcomes: &[(BitString, f64)], plan: &ShotPlan, rng: &mut R) -> Histogram {
    let mut remaining_mass: f64 = outcomes.iter().map(|(_, p)| p.max(0.0)).sum();
    let mut remaining = plan.n_shots;
    let mut hist = Histogram::new();
    for (bits, p) in outcomes {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        let q = if remaining_mass > 0.0 { (p / remaining_mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).expect("probability in range").sample(rng)
        };
        remaining -= k;
        remaining_mass -= p;
        if k == 0 {
            continue;
        }
        match plan.noise {
            None => hist.add(bits.clone(), k),
            Some(noise) => {
                for _ in 0..k {
                    let mut shot = bits.clone();
                    for q in 0..shot.width() {
                        if rng.random_bool(noise.p_flip()) {
                            shot.flip(q);
                        }
                    }
                    hist.add(shot, 1);
                }
            }
        }
    }
    hist
}

/// Unary outcome distribution `(e_k, amp_k²)` of a state.
pub(crate) fn unary_outcomes<T: Scalar>(amps: &[T]) -> Vec<(BitString, f64)> {
    let n = amps.len();
    amps.iter()
        .enumerate()
        .map(|(k, a)| (BitString::unary(n, k), (*a * *a).as_f64()))
        .collect()
}

/// Runs `c` on `input` and measures every qubit `plan.n_shots` times.
pub fn sample_circuit<T: Scalar>(c: &Circuit<T>, input: &UnaryState<T>, plan: &ShotPlan) -> Result<Histogram> {
    plan.validate()?;
    if c.width() != input.dim() {
        return Err(Error::WidthMismatch { circuit: c.width(), state: input.dim() });
    }
    let out = c.apply(input)?;
    let mut rng = lane_rng(plan.rng_seed, 0);
    Ok(sample_distribution(&unary_outcomes(out.amps()), plan, &mut rng))
}
