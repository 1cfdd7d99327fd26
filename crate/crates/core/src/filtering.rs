//! Drift filtering from stock observations: the truth simulator, the
//! observation-driven filter with its innovations process, and the exact
//! Bayesian posterior available in the constant-drift case.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, PathBundle, TimeGrid};
use crate::model::{DriftMode, MarketParams};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum FilterError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("observation series has {found} points, grid has {expected}")]
    ObservationLength { expected: usize, found: usize },
    #[error("initial posterior {0} must lie in (0,1)")]
    InitialPosteriorOutOfRange(f64),
}

/// Which probability measure drives a simulated posterior path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// Physical measure: innovations are the Brownian motion Ŵ.
    P,
    /// Risk-neutral measure used by the stochastic representations of the
    /// Cauchy problems.
    Q,
}

/// A posterior path together with the increments that drove it.
#[derive(Debug, Clone)]
pub struct PosteriorPath {
    pub grid: TimeGrid,
    /// P(t_k) at each grid point.
    pub values: Vec<f64>,
    /// The Brownian increments (innovations, when obtained from data).
    pub innovations: Vec<f64>,
    pub measure: Measure,
    /// How many Euler steps left (0,1) and were clamped back.
    pub clamp_events: usize,
}

/// One realized market scenario: the stock path and, in alternating mode,
/// the hidden chain that generated it.
#[derive(Debug, Clone)]
pub struct TruthPath {
    pub grid: TimeGrid,
    /// log S(t_k).
    pub log_stock: Vec<f64>,
    /// Chain state at each grid point (`None` in constant mode).
    pub chain: Option<Vec<u8>>,
    /// μ in force on each step [t_k, t_{k+1}).
    pub drift: Vec<f64>,
}

/// Simulates log S exactly on each step: Δlog S = (μ−σ²/2)Δt + σΔW with μ
/// read from the drift mode (constant, or the chain state attached to
/// `bundle` at the step's left endpoint).
pub fn simulate_truth(
    s0: f64,
    market: &MarketParams,
    bundle: &PathBundle,
) -> Result<TruthPath, FilterError> {
    let grid = bundle.grid;
    let dt = grid.dt();
    let mut log_stock = Vec::with_capacity(grid.n_points());
    let mut drift = Vec::with_capacity(grid.n_steps);
    let mut x = s0.ln();
    log_stock.push(x);
    for (k, dw) in bundle.increments.iter().enumerate() {
        let mu = match market.drift_mode {
            DriftMode::ConstantUnknown { high } => market.mu_of_state(if high { 1 } else { 2 }),
            DriftMode::Alternating { initial_state } => match &bundle.chain {
                Some(states) => market.mu_of_state(states[k]),
                None => market.mu_of_state(initial_state),
            },
        };
        drift.push(mu);
        x += (mu - 0.5 * market.sigma * market.sigma) * dt + market.sigma * dw;
        log_stock.push(x);
    }
    Ok(TruthPath {
        grid,
        log_stock,
        chain: bundle.chain.clone(),
        drift,
    })
}

/// Runs the filter on observed log prices.
///
/// Each step extracts the innovation ΔŴ = (1/σ)[Δlog S − (θ(P)−σ²/2)Δt] and
/// advances the posterior by ΔP = η(P)Δt + β(P)ΔŴ. The returned path carries
/// the innovations, which are standard Brownian increments under the
/// investor's information when the model is correct.
pub fn posterior_from_observations(
    p0: f64,
    market: &MarketParams,
    grid: TimeGrid,
    log_stock: &[f64],
    clamp_eps: f64,
) -> Result<PosteriorPath, FilterError> {
    if log_stock.len() != grid.n_points() {
        return Err(FilterError::ObservationLength {
            expected: grid.n_points(),
            found: log_stock.len(),
        });
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(FilterError::InitialPosteriorOutOfRange(p0));
    }
    let dt = grid.dt();
    let sigma = market.sigma;
    let mut values = Vec::with_capacity(grid.n_points());
    let mut innovations = Vec::with_capacity(grid.n_steps);
    let mut clamp_events = 0usize;
    let mut p = p0;
    values.push(p);
    for k in 0..grid.n_steps {
        let dlog = log_stock[k + 1] - log_stock[k];
        let dw = (dlog - (market.theta(p) - 0.5 * sigma * sigma) * dt) / sigma;
        innovations.push(dw);
        p += market.eta(p) * dt + market.beta(p) * dw;
        if p < clamp_eps {
            p = clamp_eps;
            clamp_events += 1;
        } else if p > 1.0 - clamp_eps {
            p = 1.0 - clamp_eps;
            clamp_events += 1;
        }
        values.push(p);
    }
    Ok(PosteriorPath {
        grid,
        values,
        innovations,
        measure: Measure::P,
        clamp_events,
    })
}

/// Exact Bayesian posterior for the constant-drift case.
///
/// Given the prior p0 = P(μ = μ₁) at time t₀ and the observed log price,
/// the posterior at t_k is
///   p(t_k) ∝ p0 · exp{ a₁·ΔL − ½a₁²σ²·Δt } vs (1−p0) with a₂,
/// where aⱼ = (μⱼ − σ²/2)/σ², ΔL = log S(t_k) − log S(t₀), Δt = t_k − t₀.
/// Computed via the log-odds increment, which is numerically stable.
pub fn posterior_closed_form(
    p0: f64,
    market: &MarketParams,
    grid: TimeGrid,
    log_stock: &[f64],
) -> Result<Vec<f64>, FilterError> {
    if log_stock.len() != grid.n_points() {
        return Err(FilterError::ObservationLength {
            expected: grid.n_points(),
            found: log_stock.len(),
        });
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(FilterError::InitialPosteriorOutOfRange(p0));
    }
    let s2 = market.sigma * market.sigma;
    let a1 = (market.mu1 - 0.5 * s2) / s2;
    let a2 = (market.mu2 - 0.5 * s2) / s2;
    let log_odds0 = (p0 / (1.0 - p0)).ln();
    let mut out = Vec::with_capacity(grid.n_points());
    for k in 0..grid.n_points() {
        let dl = log_stock[k] - log_stock[0];
        let du = grid.time(k) - grid.t0;
        let log_odds = log_odds0 + (a1 - a2) * dl - 0.5 * (a1 * a1 - a2 * a2) * s2 * du;
        // p = 1/(1+e^{−ℓ}), stable at both tails.
        out.push(1.0 / (1.0 + (-log_odds).exp()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::sde::{simulate_posterior, DEFAULT_CLAMP_EPS};
    use crate::engine::{stream, Purpose};
    use approx::assert_relative_eq;

    fn market(mode: DriftMode) -> MarketParams {
        MarketParams {
            r: 0.05,
            sigma: 0.1,
            mu1: 0.2,
            mu2: 0.02,
            q1: 10.0,
            q2: 10.0,
            drift_mode: mode,
            horizon: 10.0,
        }
    }

    #[test]
    fn truth_constant_drift_is_exact_gbm() {
        let m = market(DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let mut r = stream(1, 0, Purpose::Brownian, 0);
        let b = PathBundle::generate(grid, &mut r, (1, 0));
        let truth = simulate_truth(1.0, &m, &b).unwrap();
        let sum_dw: f64 = b.increments.iter().sum();
        let expected = (m.mu1 - 0.005) * 1.0 + m.sigma * sum_dw;
        assert_relative_eq!(*truth.log_stock.last().unwrap(), expected, max_relative = 1e-12);
        assert!(truth.drift.iter().all(|&mu| mu == m.mu1));
    }

    #[test]
    fn filter_recovers_driving_increments() {
        // Generate truth with μ = θ(p) step-by-step consistency: feed the
        // observation filter the simulated prices; the innovations must make
        // the filter path equal an SDE path driven by those innovations.
        let m = market(DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let mut r = stream(2, 0, Purpose::Brownian, 0);
        let b = PathBundle::generate(grid, &mut r, (2, 0));
        let truth = simulate_truth(1.0, &m, &b).unwrap();
        let post =
            posterior_from_observations(0.5, &m, grid, &truth.log_stock, DEFAULT_CLAMP_EPS).unwrap();
        let replay = PathBundle {
            grid,
            increments: post.innovations.clone(),
            chain: None,
            seed_id: (0, 0),
        };
        let sde_path = simulate_posterior(0.5, &m, &replay, Measure::P, DEFAULT_CLAMP_EPS).unwrap();
        for (a, b) in post.values.iter().zip(&sde_path.values) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_form_learns_the_true_drift() {
        let m = market(DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 10.0, 10_000).unwrap();
        let mut r = stream(3, 0, Purpose::Brownian, 0);
        let b = PathBundle::generate(grid, &mut r, (3, 0));
        let truth = simulate_truth(1.0, &m, &b).unwrap();
        let post = posterior_closed_form(0.5, &m, grid, &truth.log_stock).unwrap();
        assert_eq!(post[0], 0.5);
        // log-odds drift is (a₁−a₂)²σ²/2 per unit time ≈ 8.1 here, so by
        // T = 10 the posterior on the true state is essentially 1.
        assert!(*post.last().unwrap() > 0.99, "final posterior {}", post.last().unwrap());
    }

    #[test]
    fn closed_form_matches_sde_filter_at_fine_steps() {
        let m = market(DriftMode::ConstantUnknown { high: false });
        let grid = TimeGrid::new(0.0, 1.0, 20_000).unwrap();
        let mut r = stream(4, 0, Purpose::Brownian, 0);
        let b = PathBundle::generate(grid, &mut r, (4, 0));
        let truth = simulate_truth(1.0, &m, &b).unwrap();
        let exact = posterior_closed_form(0.4, &m, grid, &truth.log_stock).unwrap();
        let euler =
            posterior_from_observations(0.4, &m, grid, &truth.log_stock, DEFAULT_CLAMP_EPS).unwrap();
        let max_err = exact
            .iter()
            .zip(&euler.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 2e-3, "max |exact − Euler| = {max_err}");
    }

    #[test]
    fn length_mismatch_rejected() {
        let m = market(DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let obs = vec![0.0; 5];
        assert!(posterior_from_observations(0.5, &m, grid, &obs, 1e-12).is_err());
        assert!(posterior_closed_form(0.5, &m, grid, &obs).is_err());
    }
}
