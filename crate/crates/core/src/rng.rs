//! Counter-based random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream keyed by
//! `(master_seed, trajectory index, purpose)`, so results do not depend on how
//! trajectories are scheduled across workers.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Wiener increments of the integrator.
    Increments = 0,
    /// Brownian-bridge refinement used by the half-step rerun.
    Bridge = 1,
    /// Exact Ornstein-Uhlenbeck draw across the storage window.
    Storage = 2,
    /// Initial thermal state of the mechanical mode.
    Initial = 3,
}

const AUXILIARY: u64 = 1 << 63;

pub fn trajectory_stream(master_seed: u64, index: u64, purpose: Purpose) -> Stream {
    debug_assert!(index < AUXILIARY >> 2);
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((index << 2) | purpose as u64);
    rng
}

/// Identifies the family of streams owned by one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self { master_seed, index }
    }

    pub fn stream(&self, purpose: Purpose) -> Stream {
        trajectory_stream(self.master_seed, self.index, purpose)
    }
}

/// Stream for draws that are not tied to one trajectory (e.g. branch choice).
pub fn auxiliary_stream(master_seed: u64, tag: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(AUXILIARY | tag);
    rng
}

/// Unit complex Gaussian: `<|z|^2> = 1`, `<z^2> = 0`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
