//! Simulates the N-investor wealth system against a simulated market truth,
//! tracks defaults (wealth below 0 at any grid time), and aggregates
//! empirical loss distributions over independent realizations.
//!
//! Information discipline: a strategy call receives only what its kind is
//! entitled to see — the filter value for partial-information kinds, the
//! regime for the full-information chain kind, nothing for the constant
//! kinds. The truth objects never reach partial-information call sites.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchy::CauchyTable;
use crate::engine::{simulate_chain, stream, EngineError, PathBundle, Purpose, TimeGrid};
use crate::equilibrium::{
    strategy_value, EquilibriumError, Perturbation, StateView, StrategyKind,
};
use crate::filtering::{
    posterior_from_observations, simulate_truth, FilterError, PosteriorPath, TruthPath,
};
use crate::model::{DriftMode, EquilibriumCoefficients, InvestorParams, MarketParams, ModelError};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("scenario invalid: {0}")]
    InvalidScenario(String),
    #[error("non-finite wealth for investor {investor} at step {step} (realization {realization})")]
    NonFiniteWealth { investor: usize, step: usize, realization: u64 },
}

/// One investor's strategy assignment, optionally perturbed (for the
/// intra-personal equilibrium test).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvestorStrategy {
    pub kind: StrategyKind,
    pub perturbation: Option<Perturbation>,
}

impl InvestorStrategy {
    pub fn unperturbed(kind: StrategyKind) -> Self {
        InvestorStrategy { kind, perturbation: None }
    }
}

/// Everything needed to run realizations of one scenario.
#[derive(Debug, Clone)]
pub struct GameSetup {
    pub market: MarketParams,
    pub investors: Vec<InvestorParams>,
    pub coeff: EquilibriumCoefficients,
    pub strategies: Vec<InvestorStrategy>,
    /// Base-derivative table for `PartialInfo` strategies (∂ₚcᵢ = κᵢ·value).
    pub dc_base: Option<Arc<CauchyTable>>,
    pub initial_wealth: Vec<f64>,
    /// Prior 𝔭₁(0) for the filter.
    pub prior: f64,
    pub n_steps: usize,
    pub clamp_eps: f64,
    pub seed: u64,
}

impl GameSetup {
    pub fn validate(&self) -> Result<(), GameError> {
        self.market.validate()?;
        for inv in &self.investors {
            inv.validate()?;
        }
        let n = self.investors.len();
        if n == 0 {
            return Err(GameError::InvalidScenario("no investors".into()));
        }
        if self.strategies.len() != n || self.initial_wealth.len() != n {
            return Err(GameError::InvalidScenario(format!(
                "{} investors but {} strategies and {} initial wealths",
                n,
                self.strategies.len(),
                self.initial_wealth.len()
            )));
        }
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return Err(GameError::InvalidScenario(format!("prior {} outside (0,1)", self.prior)));
        }
        if self.n_steps == 0 {
            return Err(GameError::InvalidScenario("n_steps must be positive".into()));
        }
        for s in &self.strategies {
            if s.kind.needs_table() && self.dc_base.is_none() {
                return Err(GameError::InvalidScenario(
                    "partial-information strategy requires a ∂ₚc table".into(),
                ));
            }
            if s.kind == StrategyKind::FullInfoMarkov && !self.market.drift_mode.is_alternating() {
                return Err(GameError::InvalidScenario(
                    "regime strategy requires alternating drift mode".into(),
                ));
            }
        }
        Ok(())
    }

    fn needs_posterior(&self) -> bool {
        self.strategies.iter().any(|s| {
            matches!(
                s.kind,
                StrategyKind::PartialInfo | StrategyKind::PartialInfoFirstTermOnly
            )
        })
    }
}

/// One realization of the game.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub grid: TimeGrid,
    /// Wealth paths, `wealth[i][k]` = Xᵢ(t_k).
    pub wealth: Vec<Vec<f64>>,
    /// Strategy values, `strategy[i][k]` = πᵢ(t_k), k < n_steps.
    pub strategy: Vec<Vec<f64>>,
    pub posterior: PosteriorPath,
    pub truth: TruthPath,
    /// True iff Xᵢ dropped below 0 at any grid time.
    pub defaults: Vec<bool>,
    pub seed: u64,
    pub realization: u64,
}

impl SimResult {
    pub fn default_count(&self) -> usize {
        self.defaults.iter().filter(|&&d| d).count()
    }

    pub fn terminal_wealth(&self) -> Vec<f64> {
        self.wealth.iter().map(|w| *w.last().unwrap()).collect()
    }
}

/// Empirical distribution of the per-realization default count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDistribution {
    /// `histogram[k]` = number of realizations with exactly k defaults.
    pub histogram: Vec<usize>,
    pub n_realizations: usize,
}

impl LossDistribution {
    pub fn all_default_probability(&self) -> f64 {
        *self.histogram.last().unwrap() as f64 / self.n_realizations as f64
    }

    pub fn any_default_probability(&self) -> f64 {
        1.0 - self.histogram[0] as f64 / self.n_realizations as f64
    }
}

/// Per-realization aggregates kept when full paths are not needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub realization: u64,
    pub defaults: Vec<bool>,
    pub terminal_wealth: Vec<f64>,
    pub clamp_events: usize,
}

/// Runs one realization: truth → filter → strategies → wealth.
///
/// Wealth integrates in discounted form: with Y = e^{−rt}X,
/// ΔY = e^{−rt_k}πₖ[(μₖ−r)Δt + σΔWₖ], so the riskfree accrual is exact
/// (zero strategies give Xᵢ(T) = xᵢe^{rT} to machine precision) and all
/// wealth equations share the Brownian increments that drove the stock.
pub fn run_realization(setup: &GameSetup, realization: u64) -> Result<SimResult, GameError> {
    setup.validate()?;
    let market = &setup.market;
    let grid = TimeGrid::new(0.0, market.horizon, setup.n_steps)?;
    let dt = grid.dt();
    let n = setup.investors.len();

    let mut brownian = stream(setup.seed, realization, Purpose::Brownian, 0);
    let mut bundle = PathBundle::generate(grid, &mut brownian, (setup.seed, realization));
    if let DriftMode::Alternating { initial_state } = market.drift_mode {
        let mut chain_rng = stream(setup.seed, realization, Purpose::Chain, 0);
        bundle.chain =
            Some(simulate_chain(grid, market.q1, market.q2, initial_state, &mut chain_rng)?);
    }
    let truth = simulate_truth(1.0, market, &bundle)?;
    // The filter sees only the realized prices, never the bundle or chain.
    let posterior = posterior_from_observations(
        setup.prior,
        market,
        grid,
        &truth.log_stock,
        setup.clamp_eps,
    )?;
    let _ = setup.needs_posterior(); // posterior is always produced for artifacts

    let mut discounted: Vec<f64> = setup.initial_wealth.clone();
    let mut wealth: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = Vec::with_capacity(grid.n_points());
            v.push(setup.initial_wealth[i]);
            v
        })
        .collect();
    let mut strategy: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.n_steps); n];
    let dc_base = setup.dc_base.as_deref();

    for k in 0..grid.n_steps {
        let t = grid.time(k);
        let discount = (-market.r * t).exp();
        let mu_true = truth.drift[k];
        let dw = bundle.increments[k];
        for i in 0..n {
            let assigned = &setup.strategies[i];
            let state = match assigned.kind {
                StrategyKind::PartialInfo | StrategyKind::PartialInfoFirstTermOnly => {
                    StateView::Posterior(posterior.values[k])
                }
                StrategyKind::FullInfoMarkov => StateView::Regime(
                    truth.chain.as_ref().expect("validated alternating mode")[k],
                ),
                StrategyKind::FullInfoConstant { .. } | StrategyKind::Zero => StateView::None,
            };
            let mut pi = strategy_value(
                assigned.kind,
                market,
                &setup.coeff,
                &setup.investors[i],
                i,
                t,
                state,
                dc_base,
            )?;
            if let Some(perturbation) = &assigned.perturbation {
                pi = perturbation.apply(t, pi);
            }
            strategy[i].push(pi);
            discounted[i] += discount * pi * ((mu_true - market.r) * dt + market.sigma * dw);
            let x = (market.r * grid.time(k + 1)).exp() * discounted[i];
            if !x.is_finite() {
                return Err(GameError::NonFiniteWealth { investor: i, step: k, realization });
            }
            wealth[i].push(x);
        }
    }

    let defaults = wealth
        .iter()
        .map(|path| path.iter().any(|&x| x < 0.0))
        .collect();
    Ok(SimResult {
        grid,
        wealth,
        strategy,
        posterior,
        truth,
        defaults,
        seed: setup.seed,
        realization,
    })
}

/// Runs `n_realizations` independent realizations, keeping compact
/// summaries (realization index drives the seed stream, so results are
/// independent of execution order).
pub fn run_summaries(
    setup: &GameSetup,
    n_realizations: usize,
) -> Result<Vec<RealizationSummary>, GameError> {
    setup.validate()?;
    (0..n_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let sim = run_realization(setup, r)?;
            Ok(RealizationSummary {
                realization: r,
                defaults: sim.defaults.clone(),
                terminal_wealth: sim.terminal_wealth(),
                clamp_events: sim.posterior.clamp_events,
            })
        })
        .collect()
}

/// Aggregates default counts over independent realizations.
pub fn loss_distribution(
    setup: &GameSetup,
    n_realizations: usize,
) -> Result<LossDistribution, GameError> {
    if n_realizations == 0 {
        return Err(GameError::InvalidScenario("need at least one realization".into()));
    }
    let summaries = run_summaries(setup, n_realizations)?;
    Ok(aggregate_losses(&summaries, setup.investors.len()))
}

/// Histogram of default counts from precomputed summaries.
pub fn aggregate_losses(summaries: &[RealizationSummary], n_investors: usize) -> LossDistribution {
    let mut histogram = vec![0usize; n_investors + 1];
    for s in summaries {
        histogram[s.defaults.iter().filter(|&&d| d).count()] += 1;
    }
    LossDistribution { histogram, n_realizations: summaries.len() }
}

/// Drift source for a probe simulation started mid-horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeDrift {
    /// Full information: the wealth drift uses a known constant μ.
    Known(f64),
    /// Partial information: the wealth dynamics are driven by the
    /// innovations, with drift θ(P) for the filter P started at p0.
    Filtered { p0: f64 },
}

/// A probe simulation: the game started at (t0, x, state) rather than 0 —
/// the footing on which the objective Jᵢ and the value function are defined.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    pub market: MarketParams,
    pub investors: Vec<InvestorParams>,
    pub coeff: EquilibriumCoefficients,
    pub strategies: Vec<InvestorStrategy>,
    pub dc_base: Option<Arc<CauchyTable>>,
    pub initial_wealth: Vec<f64>,
    pub t0: f64,
    pub drift: ProbeDrift,
    pub n_steps: usize,
    pub clamp_eps: f64,
    pub seed: u64,
}

/// Terminal wealth vectors over `n_paths` independent paths of the probe.
///
/// Under `Filtered`, wealth integrates
/// ΔY = e^{−rt}π[(θ(P)−r)Δt + σΔŴ] with P the ℙ-measure filter — the
/// observation-filtration form of the wealth equation; under `Known` the
/// same with μ in place of θ(P).
pub fn probe_terminal_wealth(
    spec: &ProbeSpec,
    n_paths: usize,
) -> Result<Vec<Vec<f64>>, GameError> {
    let market = &spec.market;
    let n = spec.investors.len();
    if spec.strategies.len() != n || spec.initial_wealth.len() != n {
        return Err(GameError::InvalidScenario("probe spec length mismatch".into()));
    }
    if !(spec.t0 >= 0.0 && spec.t0 < market.horizon) {
        return Err(GameError::InvalidScenario(format!("probe t0 {} outside [0,T)", spec.t0)));
    }
    let grid = TimeGrid::new(spec.t0, market.horizon, spec.n_steps)?;
    let dt = grid.dt();
    let dc_base = spec.dc_base.as_deref();
    (0..n_paths as u64)
        .into_par_iter()
        .map(|path_idx| {
            let mut rng = stream(spec.seed, path_idx, Purpose::Brownian, 0);
            let bundle = PathBundle::generate(grid, &mut rng, (spec.seed, path_idx));
            let posterior = match spec.drift {
                ProbeDrift::Filtered { p0 } => Some(crate::engine::simulate_posterior(
                    p0,
                    market,
                    &bundle,
                    crate::filtering::Measure::P,
                    spec.clamp_eps,
                )?),
                ProbeDrift::Known(_) => None,
            };
            let mut discounted: Vec<f64> = spec
                .initial_wealth
                .iter()
                .map(|x| (-market.r * spec.t0).exp() * x)
                .collect();
            for k in 0..grid.n_steps {
                let t = grid.time(k);
                let discount = (-market.r * t).exp();
                let dw = bundle.increments[k];
                let (drift_mu, state) = match (&spec.drift, &posterior) {
                    (ProbeDrift::Known(mu), _) => (*mu, StateView::None),
                    (ProbeDrift::Filtered { .. }, Some(post)) => {
                        let p = post.values[k];
                        (market.theta(p), StateView::Posterior(p))
                    }
                    _ => unreachable!(),
                };
                for i in 0..n {
                    let assigned = &spec.strategies[i];
                    let view = match assigned.kind {
                        StrategyKind::PartialInfo | StrategyKind::PartialInfoFirstTermOnly => state,
                        StrategyKind::FullInfoConstant { .. } | StrategyKind::Zero => {
                            StateView::None
                        }
                        StrategyKind::FullInfoMarkov => {
                            return Err(GameError::InvalidScenario(
                                "regime strategies are not supported in probe simulations".into(),
                            ))
                        }
                    };
                    let mut pi = strategy_value(
                        assigned.kind,
                        market,
                        &spec.coeff,
                        &spec.investors[i],
                        i,
                        t,
                        view,
                        dc_base,
                    )?;
                    if let Some(perturbation) = &assigned.perturbation {
                        pi = perturbation.apply(t, pi);
                    }
                    discounted[i] +=
                        discount * pi * ((drift_mu - market.r) * dt + market.sigma * dw);
                }
            }
            let growth = (market.r * market.horizon).exp();
            let terminal: Vec<f64> = discounted.iter().map(|y| growth * y).collect();
            if terminal.iter().any(|x| !x.is_finite()) {
                return Err(GameError::NonFiniteWealth {
                    investor: 0,
                    step: grid.n_steps,
                    realization: path_idx,
                });
            }
            Ok(terminal)
        })
        .collect()
}

/// Reduces probe terminal wealth to (Xᵢ(T), X̄(T)) pairs for investor `i`.
pub fn probe_terminal_samples(terminal: &[Vec<f64>], i: usize) -> Vec<(f64, f64)> {
    terminal
        .iter()
        .map(|xs| (xs[i], xs.iter().sum::<f64>() / xs.len() as f64))
        .collect()
}

/// Joint terminal samples (Xᵢ(T), X̄(T)) for investor `i` over
/// `n_realizations` realizations — the input to the objective estimator.
pub fn terminal_samples(
    setup: &GameSetup,
    i: usize,
    n_realizations: usize,
) -> Result<Vec<(f64, f64)>, GameError> {
    let summaries = run_summaries(setup, n_realizations)?;
    let n = setup.investors.len() as f64;
    Ok(summaries
        .iter()
        .map(|s| {
            let x_bar = s.terminal_wealth.iter().sum::<f64>() / n;
            (s.terminal_wealth[i], x_bar)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::DEFAULT_CLAMP_EPS;
    use crate::model::{compute_coefficients, investors_gamma_ramp};
    use approx::assert_relative_eq;

    fn figure1_market() -> MarketParams {
        MarketParams {
            r: 0.05,
            sigma: 0.1,
            mu1: 0.2,
            mu2: 0.02,
            q1: 10.0,
            q2: 10.0,
            drift_mode: DriftMode::ConstantUnknown { high: true },
            horizon: 10.0,
        }
    }

    fn setup_with(kind: StrategyKind, market: MarketParams) -> GameSetup {
        let investors = investors_gamma_ramp(10, 8.0, 0.1, 0.5, 0.5);
        let coeff = compute_coefficients(&investors).unwrap();
        let n = investors.len();
        GameSetup {
            market,
            investors,
            coeff,
            strategies: vec![InvestorStrategy::unperturbed(kind); n],
            dc_base: None,
            initial_wealth: vec![1.0; n],
            prior: 0.5,
            n_steps: 1000,
            clamp_eps: DEFAULT_CLAMP_EPS,
            seed: 17,
        }
    }

    #[test]
    fn zero_strategy_riskfree_accrual_exact() {
        let setup = setup_with(StrategyKind::Zero, figure1_market());
        let sim = run_realization(&setup, 0).unwrap();
        let expected = (0.05f64 * 10.0).exp();
        for path in &sim.wealth {
            assert_relative_eq!(*path.last().unwrap(), expected, max_relative = 1e-13);
        }
        assert_eq!(sim.default_count(), 0);
    }

    #[test]
    fn average_wealth_matches_aggregate_integration() {
        let setup = setup_with(StrategyKind::FullInfoConstant { mu: 0.2 }, figure1_market());
        let sim = run_realization(&setup, 3).unwrap();
        let n = setup.investors.len() as f64;
        let grid = sim.grid;
        let dt = grid.dt();
        // integrate x̄ directly with the mean strategy and the same noise
        // (regenerate the bundle from the same stream)
        let mut rng = stream(setup.seed, 3, Purpose::Brownian, 0);
        let bundle = PathBundle::generate(grid, &mut rng, (setup.seed, 3));
        let mut y_bar = 1.0f64;
        for k in 0..grid.n_steps {
            let pi_bar: f64 = (0..setup.investors.len()).map(|i| sim.strategy[i][k]).sum::<f64>() / n;
            let discount = (-setup.market.r * grid.time(k)).exp();
            y_bar += discount
                * pi_bar
                * ((sim.truth.drift[k] - setup.market.r) * dt
                    + setup.market.sigma * bundle.increments[k]);
        }
        let x_bar_direct = (setup.market.r * setup.market.horizon).exp() * y_bar;
        let x_bar_from_paths: f64 =
            sim.wealth.iter().map(|w| *w.last().unwrap()).sum::<f64>() / n;
        assert_relative_eq!(x_bar_direct, x_bar_from_paths, max_relative = 1e-10);
    }

    #[test]
    fn same_seed_same_stock_across_information_modes() {
        let full = setup_with(StrategyKind::FullInfoConstant { mu: 0.2 }, figure1_market());
        let partial = setup_with(StrategyKind::PartialInfoFirstTermOnly, figure1_market());
        let a = run_realization(&full, 7).unwrap();
        let b = run_realization(&partial, 7).unwrap();
        assert_eq!(a.truth.log_stock, b.truth.log_stock);
        assert_ne!(a.wealth[0], b.wealth[0], "strategies must differ");
    }

    #[test]
    fn single_investor_zero_strategy_loss_histogram() {
        let mut setup = setup_with(StrategyKind::Zero, figure1_market());
        setup.investors.truncate(1);
        setup.strategies.truncate(1);
        setup.initial_wealth.truncate(1);
        setup.coeff = compute_coefficients(&setup.investors).unwrap();
        let dist = loss_distribution(&setup, 20).unwrap();
        assert_eq!(dist.histogram, vec![20, 0]);
        assert_eq!(dist.all_default_probability(), 0.0);
    }

    #[test]
    fn histogram_sums_to_realization_count() {
        let setup = setup_with(StrategyKind::FullInfoConstant { mu: 0.2 }, figure1_market());
        let dist = loss_distribution(&setup, 25).unwrap();
        assert_eq!(dist.histogram.iter().sum::<usize>(), 25);
        assert_eq!(dist.histogram.len(), 11);
    }

    #[test]
    fn zero_delta_perturbation_is_bit_identical() {
        let base = setup_with(StrategyKind::FullInfoConstant { mu: 0.2 }, figure1_market());
        let mut perturbed = base.clone();
        perturbed.strategies[2].perturbation =
            Some(Perturbation { delta: 0.0, t_start: 0.0, t_end: 0.1 });
        let a = run_realization(&base, 1).unwrap();
        let b = run_realization(&perturbed, 1).unwrap();
        assert_eq!(a.wealth, b.wealth);
    }

    #[test]
    fn perturbation_changes_only_target_investor() {
        let base = setup_with(StrategyKind::FullInfoConstant { mu: 0.2 }, figure1_market());
        let mut perturbed = base.clone();
        perturbed.strategies[2].perturbation =
            Some(Perturbation { delta: 1.0, t_start: 0.0, t_end: 0.1 });
        let a = run_realization(&base, 1).unwrap();
        let b = run_realization(&perturbed, 1).unwrap();
        assert_ne!(a.wealth[2], b.wealth[2]);
        assert_eq!(a.wealth[0], b.wealth[0]);
        assert_eq!(a.wealth[9], b.wealth[9]);
    }

    #[test]
    fn invalid_setups_rejected() {
        let mut setup = setup_with(StrategyKind::PartialInfo, figure1_market());
        // partial info without a table
        assert!(matches!(run_realization(&setup, 0), Err(GameError::InvalidScenario(_))));
        // regime strategy in constant mode
        setup.strategies =
            vec![InvestorStrategy::unperturbed(StrategyKind::FullInfoMarkov); 10];
        assert!(matches!(run_realization(&setup, 0), Err(GameError::InvalidScenario(_))));
        let mut setup = setup_with(StrategyKind::Zero, figure1_market());
        setup.prior = 1.0;
        assert!(run_realization(&setup, 0).is_err());
    }

    #[test]
    fn markov_full_info_runs_and_uses_regimes() {
        let mut market = figure1_market();
        market.drift_mode = DriftMode::Alternating { initial_state: 1 };
        let setup = setup_with(StrategyKind::FullInfoMarkov, market);
        let sim = run_realization(&setup, 0).unwrap();
        let chain = sim.truth.chain.as_ref().unwrap();
        assert!(chain.contains(&1) && chain.contains(&2), "chain must switch over T=10");
        // strategy tracks the regime: distinct values for distinct regimes
        let k1 = chain.iter().position(|&s| s == 1).unwrap();
        let k2 = chain.iter().position(|&s| s == 2).unwrap();
        if k1 < sim.grid.n_steps && k2 < sim.grid.n_steps {
            assert_ne!(sim.strategy[0][k1], sim.strategy[0][k2]);
        }
    }

    #[test]
    fn terminal_samples_shape() {
        let setup = setup_with(StrategyKind::Zero, figure1_market());
        let samples = terminal_samples(&setup, 0, 8).unwrap();
        assert_eq!(samples.len(), 8);
        let expected = (0.05f64 * 10.0).exp();
        for (x, xb) in samples {
            assert_relative_eq!(x, expected, max_relative = 1e-13);
            assert_relative_eq!(xb, expected, max_relative = 1e-13);
        }
    }
}
