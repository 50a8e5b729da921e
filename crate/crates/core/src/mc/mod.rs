//! Monte Carlo oracles.
//!
//! Every path draws from its own ChaCha8 stream keyed by `(seed, path index)`,
//! and paths are reduced in fixed-size blocks in index order, so results are
//! bit-identical for any worker count and with or without the `parallel` feature.

mod exec;
mod levy_paths;
mod one_dim;
mod rng;
mod stats;
mod two_dim;

pub use exec::{run_blocks, BLOCK_SIZE};
pub use levy_paths::{simulate_levy_psi, simulate_levy_sup};
pub use one_dim::simulate_one_dim;
pub use rng::{PathRng, StreamFactory};
pub use stats::{ks_weighted, Estimate, LevelEstimate, Moments};
pub use two_dim::{default_tilt, sample_ruin_time, simulate_psi, simulate_psi_uv, RuinTimeSample};

use crate::error::{invalid, Result};

pub(crate) fn domain_constant() -> u64 {
    rng::domain::CONSTANT
}

pub(crate) fn domain_constant_lattice() -> u64 {
    rng::domain::CONSTANT_LATTICE
}

/// Importance-sampling drift for the driving Brownian pair `(B_1, B_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsDrift {
    None,
    /// Tilt so the endpoint mean sits at the dominating point of the ruin set.
    Auto,
    Fixed(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: u64,
    /// Time steps on `[0, window_end]`; 0 selects a default per estimator.
    pub n_steps: usize,
    pub seed: u64,
    pub is_drift: IsDrift,
    /// Ruin is checked on `[0, window_end]`, `0 < window_end <= 1`.
    pub window_end: f64,
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 0,
            seed: 0,
            is_drift: IsDrift::Auto,
            window_end: 1.0,
            workers: 1,
        }
    }
}

impl SimConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(invalid("need at least two paths"));
        }
        if !(self.window_end > 0.0 && self.window_end <= 1.0) {
            return Err(invalid(format!(
                "window_end must lie in (0, 1], got {}",
                self.window_end
            )));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if let IsDrift::Fixed(a, b) = self.is_drift {
            if !(a.is_finite() && b.is_finite()) {
                return Err(invalid("importance-sampling drift must be finite"));
            }
        }
        Ok(())
    }
}
