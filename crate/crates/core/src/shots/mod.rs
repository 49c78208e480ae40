//! Shot-based execution: sampling, inner-product estimators, ℓ∞ tomography
//! with sign retrieval, bit-flip noise and unary post-selection.

mod estimators;
mod histogram;
mod sampling;
mod tomography;

pub use estimators::{signed_ip_circuit, signed_ip_estimate, square_ip_circuit, square_ip_estimate, EstimateLog};
pub use histogram::{mitigate, BitString, Histogram, Mitigated};
pub use sampling::{lane_rng, sample_circuit, sample_distribution};
pub use tomography::{tomography_ancilla, tomography_rbs_pairs, Tomography};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Independent measurement bit flips, applied to every qubit of every shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitFlipNoise {
    p_flip: f64,
}

impl BitFlipNoise {
    pub fn new(p_flip: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p_flip) {
            return Err(Error::InvalidPlan(format!("flip probability {p_flip} outside [0, 1)")));
        }
        Ok(BitFlipNoise { p_flip })
    }

    pub fn p_flip(&self) -> f64 {
        self.p_flip
    }
}

/// How a circuit is sampled: shot count, seed, noise and post-selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotPlan {
    pub n_shots: u64,
    pub rng_seed: u64,
    pub noise: Option<BitFlipNoise>,
    pub mitigation: bool,
    /// ℓ∞ tomography threshold; `None` means `1/√n_shots`.
    pub delta: Option<f64>,
}

impl ShotPlan {
    pub fn new(n_shots: u64, rng_seed: u64) -> Result<Self> {
        if n_shots == 0 {
            return Err(Error::InvalidPlan("n_shots must be at least 1".into()));
        }
        Ok(ShotPlan { n_shots, rng_seed, noise: None, mitigation: false, delta: None })
    }

    pub fn with_noise(mut self, p_flip: f64) -> Result<Self> {
        self.noise = if p_flip > 0.0 { Some(BitFlipNoise::new(p_flip)?) } else { None };
        Ok(self)
    }

    pub fn with_mitigation(mut self, on: bool) -> Self {
        self.mitigation = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(1.0 / (self.n_shots as f64).sqrt())
    }

    /// Plan for parallel lane `lane`: same settings, derived seed.
    pub fn derive(&self, lane: u64) -> ShotPlan {
        self.with_seed(split_seed(self.rng_seed, lane))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_shots == 0 {
            return Err(Error::InvalidPlan("n_shots must be at least 1".into()));
        }
        Ok(())
    }
}

/// Deterministic sub-seed: first output of ChaCha8 keyed by `seed` on stream `lane`.
pub fn split_seed(seed: u64, lane: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng.next_u64()
}

/// Outcome of a sampled estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Shots surviving post-selection.
    pub n_used: u64,
    pub n_total: u64,
}
