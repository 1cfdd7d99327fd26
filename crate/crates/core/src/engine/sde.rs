//! Euler–Maruyama and exponential-Euler integrators for the posterior P, the
//! tangent process ζ, and the measure-change weight Z, plus exact sampling of
//! the two-state regime chain.

use rand::Rng;
use rand_distr::Exp;

use super::{EngineError, PathBundle, TimeGrid};
use crate::filtering::{Measure, PosteriorPath};
use crate::model::MarketParams;

/// Stored posterior values are clamped into [ε, 1−ε].
///
/// In continuous time the filter never leaves (0,1); the discrete step can
/// overshoot, so the value is clamped and the event counted. 1e-12 keeps the
/// clamp rate below 0.1% of steps at dt = 1e-3 on the reference parameter
/// sets while staying far inside f64 resolution of both endpoints.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-12;

/// Euler–Maruyama path of the filter SDE.
///
/// Under `Measure::P`: dP = η(P)du + β(P)dB. Under `Measure::Q` the drift
/// gains the Girsanov correction −β(P)(θ(P)−r)/σ.
pub fn simulate_posterior(
    p0: f64,
    market: &MarketParams,
    bundle: &PathBundle,
    measure: Measure,
    clamp_eps: f64,
) -> Result<PosteriorPath, EngineError> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(EngineError::InitialPosteriorOutOfRange(p0));
    }
    let grid = bundle.grid;
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.n_points());
    let mut p = p0;
    values.push(p);
    let mut clamp_events = 0usize;
    for (k, dw) in bundle.increments.iter().enumerate() {
        let beta = market.beta(p);
        let drift = match measure {
            Measure::P => market.eta(p),
            Measure::Q => market.eta(p) - beta * market.risk_price(p),
        };
        p += drift * dt + beta * dw;
        if !p.is_finite() {
            return Err(EngineError::NonFinite { step: k, what: "posterior" });
        }
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
        innovations: bundle.increments.clone(),
        measure,
        clamp_events,
    })
}

/// Tangent process ζ of the posterior w.r.t. its initial value, co-driven by
/// the increments stored in `posterior` (which must be a Q-measure path).
#[derive(Debug, Clone)]
pub struct TangentPath {
    pub grid: TimeGrid,
    /// ζ at each grid point; ζ(t0) = 1, positive throughout.
    pub values: Vec<f64>,
}

/// dζ = ζ Γ(P)du + ζ Λ(P)dW_Q integrated in log space, so positivity is
/// structural. Γ(p) = d/dp(η − β(θ−r)/σ), Λ(p) = β′(p).
pub fn simulate_tangent(
    posterior: &PosteriorPath,
    market: &MarketParams,
) -> Result<TangentPath, EngineError> {
    if posterior.measure != Measure::Q {
        return Err(EngineError::WrongMeasure { expected: "Q", found: "P" });
    }
    let grid = posterior.grid;
    let dt = grid.dt();
    let dmu = market.mu1 - market.mu2;
    let mut values = Vec::with_capacity(grid.n_points());
    let mut log_zeta = 0.0f64;
    values.push(1.0);
    for (k, dw) in posterior.innovations.iter().enumerate() {
        let p = posterior.values[k];
        let gamma = market.eta_prime()
            - market.beta_prime(p) * market.risk_price(p)
            - market.beta(p) * dmu / market.sigma;
        let lambda = market.beta_prime(p);
        log_zeta += (gamma - 0.5 * lambda * lambda) * dt + lambda * dw;
        if !log_zeta.is_finite() {
            return Err(EngineError::NonFinite { step: k, what: "tangent" });
        }
        values.push(log_zeta.exp());
    }
    Ok(TangentPath { grid, values })
}

/// The change-of-measure weight Z along a P-measure posterior path.
#[derive(Debug, Clone)]
pub struct MeasureWeight {
    pub grid: TimeGrid,
    /// Z at each grid point; Z(t0) = 1, positive throughout.
    pub values: Vec<f64>,
}

/// Z(u) = exp(−½∫φ(P)²ds − ∫φ(P)dW) with φ = (θ(P)−r)/σ, integrated in log
/// space with the same increments that drove `posterior`.
pub fn measure_weight(
    posterior: &PosteriorPath,
    market: &MarketParams,
) -> Result<MeasureWeight, EngineError> {
    if posterior.measure != Measure::P {
        return Err(EngineError::WrongMeasure { expected: "P", found: "Q" });
    }
    let grid = posterior.grid;
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.n_points());
    let mut log_z = 0.0f64;
    values.push(1.0);
    for (k, dw) in posterior.innovations.iter().enumerate() {
        let phi = market.risk_price(posterior.values[k]);
        log_z += -0.5 * phi * phi * dt - phi * dw;
        if !log_z.is_finite() {
            return Err(EngineError::NonFinite { step: k, what: "measure weight" });
        }
        values.push(log_z.exp());
    }
    Ok(MeasureWeight { grid, values })
}

/// Exact two-state chain path: exponential holding times, projected onto the
/// grid (the state reported at each grid time is the state just reached).
pub fn simulate_chain(
    grid: TimeGrid,
    q1: f64,
    q2: f64,
    initial_state: u8,
    rng: &mut impl Rng,
) -> Result<Vec<u8>, EngineError> {
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(EngineError::NonpositiveRates(q1, q2));
    }
    let mut states = Vec::with_capacity(grid.n_points());
    let mut state = initial_state;
    let mut t = grid.t0;
    let mut next_jump = t + rng.sample(Exp::new(if state == 1 { q1 } else { q2 }).unwrap());
    for k in 0..grid.n_points() {
        let tk = grid.time(k);
        while next_jump <= tk {
            state = if state == 1 { 2 } else { 1 };
            t = next_jump;
            next_jump = t + rng.sample(Exp::new(if state == 1 { q1 } else { q2 }).unwrap());
        }
        states.push(state);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{rng::stream, Purpose};
    use crate::model::DriftMode;
    use approx::assert_relative_eq;

    fn market(mu1: f64, mu2: f64, mode: DriftMode) -> MarketParams {
        MarketParams {
            r: 0.05,
            sigma: 0.1,
            mu1,
            mu2,
            q1: 10.0,
            q2: 10.0,
            drift_mode: mode,
            horizon: 10.0,
        }
    }

    fn bundle(seed: u64, grid: TimeGrid) -> PathBundle {
        let mut r = stream(seed, 0, Purpose::Brownian, 0);
        PathBundle::generate(grid, &mut r, (seed, 0))
    }

    #[test]
    fn posterior_constant_when_drifts_equal() {
        let m = market(0.1, 0.1, DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let path = simulate_posterior(0.3, &m, &bundle(1, grid), Measure::P, DEFAULT_CLAMP_EPS).unwrap();
        assert!(path.values.iter().all(|&p| p == 0.3));
        assert_eq!(path.clamp_events, 0);
    }

    #[test]
    fn posterior_rejects_bad_start() {
        let m = market(0.2, 0.02, DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        assert!(simulate_posterior(0.0, &m, &bundle(1, grid), Measure::P, DEFAULT_CLAMP_EPS).is_err());
        assert!(simulate_posterior(1.0, &m, &bundle(1, grid), Measure::P, DEFAULT_CLAMP_EPS).is_err());
    }

    #[test]
    fn tangent_is_one_when_drifts_equal_constant_mode() {
        // Γ ≡ Λ ≡ 0, so ζ ≡ 1.
        let m = market(0.1, 0.1, DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let post = simulate_posterior(0.4, &m, &bundle(2, grid), Measure::Q, DEFAULT_CLAMP_EPS).unwrap();
        let zeta = simulate_tangent(&post, &m).unwrap();
        assert_eq!(zeta.values[0], 1.0);
        assert!(zeta.values.iter().all(|&z| (z - 1.0).abs() < 1e-14));
    }

    #[test]
    fn tangent_requires_q_measure() {
        let m = market(0.2, 0.02, DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let post = simulate_posterior(0.5, &m, &bundle(3, grid), Measure::P, DEFAULT_CLAMP_EPS).unwrap();
        assert!(simulate_tangent(&post, &m).is_err());
    }

    #[test]
    fn weight_is_one_at_zero_risk_price() {
        // μ₁ = μ₂ = r makes θ ≡ r, so Z ≡ 1.
        let m = market(0.05, 0.05, DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let post = simulate_posterior(0.5, &m, &bundle(4, grid), Measure::P, DEFAULT_CLAMP_EPS).unwrap();
        let z = measure_weight(&post, &m).unwrap();
        assert!(z.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn weight_terminal_mean_is_one() {
        let m = market(0.2, 0.02, DriftMode::ConstantUnknown { high: true });
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let n_paths = 4000;
        let mut terminal = Vec::with_capacity(n_paths);
        for lane in 0..n_paths {
            let mut r = stream(11, lane as u64, Purpose::Brownian, 0);
            let b = PathBundle::generate(grid, &mut r, (11, lane as u64));
            let post = simulate_posterior(0.5, &m, &b, Measure::P, DEFAULT_CLAMP_EPS).unwrap();
            let z = measure_weight(&post, &m).unwrap();
            terminal.push(*z.values.last().unwrap());
            assert!(z.values.iter().all(|&v| v > 0.0));
        }
        let mean = terminal.iter().sum::<f64>() / n_paths as f64;
        let var = terminal.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_paths - 1) as f64;
        let se = (var / n_paths as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn chain_rejects_zero_rates() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let mut r = stream(5, 0, Purpose::Chain, 0);
        assert!(simulate_chain(grid, 0.0, 1.0, 1, &mut r).is_err());
    }

    #[test]
    fn chain_long_run_occupation() {
        let grid = TimeGrid::new(0.0, 10_000.0, 100_000).unwrap();
        let mut r = stream(6, 0, Purpose::Chain, 0);
        let states = simulate_chain(grid, 2.0, 1.0, 1, &mut r).unwrap();
        let frac1 = states.iter().filter(|&&s| s == 1).count() as f64 / states.len() as f64;
        // stationary P(state 1) = q2/(q1+q2) = 1/3
        assert!((frac1 - 1.0 / 3.0).abs() < 0.02, "frac1 = {frac1}");
    }

    #[test]
    fn chain_same_seed_identical() {
        let grid = TimeGrid::new(0.0, 10.0, 1000).unwrap();
        let mut r1 = stream(7, 0, Purpose::Chain, 0);
        let mut r2 = stream(7, 0, Purpose::Chain, 0);
        let a = simulate_chain(grid, 10.0, 10.0, 1, &mut r1).unwrap();
        let b = simulate_chain(grid, 10.0, 10.0, 1, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bundle_determinism_and_increment_variance() {
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let b1 = bundle(42, grid);
        let b2 = bundle(42, grid);
        assert_eq!(b1.increments, b2.increments);
        let dt = grid.dt();
        let var = b1.increments.iter().map(|x| x * x).sum::<f64>() / b1.increments.len() as f64;
        assert_relative_eq!(var, dt, max_relative = 0.1);
    }

    #[test]
    fn alternating_posterior_oscillates_around_half() {
        let m = market(0.2, 0.02, DriftMode::Alternating { initial_state: 1 });
        let grid = TimeGrid::new(0.0, 10.0, 10_000).unwrap();
        let post = simulate_posterior(0.5, &m, &bundle(8, grid), Measure::P, DEFAULT_CLAMP_EPS).unwrap();
        let mean = post.values.iter().sum::<f64>() / post.values.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "time-average {mean}");
    }
}
