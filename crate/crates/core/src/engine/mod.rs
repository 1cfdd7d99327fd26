//! Seeded random streams, Brownian/chain path generation, and the SDE
//! integrators for the posterior, tangent, and change-of-measure processes.

pub mod rng;
pub mod sde;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rng::{stream, Purpose};
pub use sde::{
    measure_weight, simulate_chain, simulate_posterior, simulate_tangent, MeasureWeight,
    TangentPath, DEFAULT_CLAMP_EPS,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("initial posterior {0} must lie in (0,1)")]
    InitialPosteriorOutOfRange(f64),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("path expected under measure {expected} but was simulated under {found}")]
    WrongMeasure { expected: &'static str, found: &'static str },
    #[error("chain rates must be > 0 (q1={0}, q2={1})")]
    NonpositiveRates(f64, f64),
    #[error("non-finite value at step {step}: {what}")]
    NonFinite { step: usize, what: &'static str },
}

/// Uniform time grid on [t0, t_end] with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self, EngineError> {
        let g = TimeGrid { t0, t_end, n_steps };
        if n_steps == 0 || !(t_end > t0) || !g.dt().is_finite() {
            return Err(EngineError::InvalidGrid(format!(
                "t0={t0}, t_end={t_end}, n_steps={n_steps}"
            )));
        }
        Ok(g)
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    /// k-th grid time, k = 0..=n_steps.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }
}

/// One path's driving noise: Brownian increments over a grid, optionally a
/// regime-chain path sampled at the grid points.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub grid: TimeGrid,
    /// ΔW_k, k = 0..n_steps; variance dt each.
    pub increments: Vec<f64>,
    /// Chain state ∈ {1,2} at each grid point (alternating mode only).
    pub chain: Option<Vec<u8>>,
    /// (seed, realization) that produced this bundle.
    pub seed_id: (u64, u64),
}

impl PathBundle {
    /// Draws Brownian increments from `rng`; the chain, when needed, must be
    /// attached separately (it uses its own stream).
    pub fn generate(grid: TimeGrid, rng: &mut impl Rng, seed_id: (u64, u64)) -> Self {
        let sqrt_dt = grid.dt().sqrt();
        let increments = (0..grid.n_steps)
            .map(|_| sqrt_dt * rng.sample::<f64, _>(StandardNormal))
            .collect();
        PathBundle {
            grid,
            increments,
            chain: None,
            seed_id,
        }
    }
}
