//! Numbered verification criteria with pinned tolerances — the acceptance
//! gate behind `mvgame verify` and the integration test of the same name.
//!
//! Each criterion is self-contained: it builds (or pulls from a shared
//! cache) the oracles it needs, runs the check, and reports one pass/fail
//! verdict with the measured quantities in `details`. The criteria are
//! grouped into suites (`filter`, `cauchy`, `equilibrium`, `figures`) so
//! the cheap gates can run without the figure-scale simulations.

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::Rng;
use rand_distr::Exp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts::{
    load_or_build_tables, run_simulate_pipeline, ArtifactError, Manifest, TableSet,
};
use crate::cauchy::{
    c_markov, estimate_base_c_stopped, estimate_base_dc, estimate_value_offset,
    r_source_from_base, solve_first_fd_nested,
    solve_second_fd, value_offset_markov, value_slope_const, value_slope_markov, CauchyError,
    FdConfig, McConfig, SignVariant,
};
use crate::config::{ConfigError, ScenarioConfig, TableConfig};
use crate::engine::{
    simulate_posterior, stream, EngineError, PathBundle, Purpose, TimeGrid, DEFAULT_CLAMP_EPS,
};
use crate::equilibrium::{
    objective_from_terminal, strategy_value, value_function, EquilibriumError, Perturbation,
    StateView, StrategyKind,
};
use crate::filtering::{
    posterior_closed_form, posterior_from_observations, simulate_truth, FilterError, Measure,
};
use crate::game::{
    aggregate_losses, probe_terminal_samples, probe_terminal_wealth, run_summaries, GameError,
    GameSetup, InvestorStrategy, ProbeDrift, ProbeSpec,
};
use crate::model::{
    compute_coefficients, investors_gamma_ramp, DriftMode, InvestorParams, MarketParams,
    ModelError,
};

/// The sign convention adopted for the per-time value slope after the
/// empirical adjudication in criterion 8.
pub const ADOPTED_SIGN: SignVariant = SignVariant::Plus;

#[derive(Error, Debug)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Cauchy(#[from] CauchyError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown criterion id {0}")]
    UnknownCriterion(u32),
    #[error("unknown suite `{0}` (expected filter, cauchy, equilibrium, or figures)")]
    UnknownSuite(String),
    #[error("verification i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// One criterion's verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

/// Criterion groups runnable independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Filter,
    Cauchy,
    Equilibrium,
    Figures,
}

impl Suite {
    pub fn criteria(self) -> &'static [u32] {
        match self {
            Suite::Filter => &[1, 2, 3],
            Suite::Cauchy => &[4, 5, 6],
            Suite::Equilibrium => &[7, 8, 9],
            Suite::Figures => &[10, 11, 12],
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, VerifyError> {
        match s {
            "filter" => Ok(Suite::Filter),
            "cauchy" => Ok(Suite::Cauchy),
            "equilibrium" => Ok(Suite::Equilibrium),
            "figures" => Ok(Suite::Figures),
            other => Err(VerifyError::UnknownSuite(other.to_string())),
        }
    }
}

/// All criterion ids in execution order.
pub fn all_criteria() -> Vec<u32> {
    (1..=12).collect()
}

const CRITERION_NAMES: [&str; 12] = [
    "filter-learning",
    "posterior-boundary",
    "filter-closed-vs-sde",
    "cauchy-cross-oracle",
    "derivative-representation",
    "regime-closed-forms",
    "degenerate-reduction",
    "value-objective",
    "intra-equilibrium",
    "figure1-defaults",
    "figure2-defaults",
    "determinism",
];

/// Ten-investor market behind the constant-drift experiments.
pub fn figure1_market() -> MarketParams {
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

/// γᵢ = 8 + 0.1i, λᴹ = λⱽ = 0.5.
pub fn figure1_investors() -> Vec<InvestorParams> {
    investors_gamma_ramp(10, 8.0, 0.1, 0.5, 0.5)
}

/// Same market with the drift following the observable/hidden two-state
/// chain (q₁ = q₂ = 10).
pub fn figure2_market() -> MarketParams {
    MarketParams {
        drift_mode: DriftMode::Alternating { initial_state: 1 },
        ..figure1_market()
    }
}

/// γᵢ = 0.1i, λᴹ = λⱽ = 0.9.
pub fn figure2_investors() -> Vec<InvestorParams> {
    investors_gamma_ramp(10, 0.0, 0.1, 0.9, 0.9)
}

/// Runs criteria and caches the expensive Monte-Carlo tables across them.
pub struct Verifier {
    cache_dir: PathBuf,
    fig1_tables: OnceLock<TableSet>,
    fig2_tables: OnceLock<TableSet>,
}

/// Default on-disk cache location for the table builds.
pub fn default_cache_dir() -> PathBuf {
    std::env::temp_dir().join("mvgame-tables")
}

impl Verifier {
    pub fn new(cache_dir: PathBuf) -> Self {
        Verifier {
            cache_dir,
            fig1_tables: OnceLock::new(),
            fig2_tables: OnceLock::new(),
        }
    }

    /// Runs the listed criteria in order.
    pub fn run(&self, ids: &[u32]) -> Vec<CriterionResult> {
        ids.iter().map(|&id| self.criterion(id)).collect()
    }

    /// Runs one criterion, converting internal errors into a failed verdict.
    pub fn criterion(&self, id: u32) -> CriterionResult {
        let start = Instant::now();
        let outcome = match id {
            1 => self.filter_learning(),
            2 => self.posterior_boundary(),
            3 => self.closed_vs_sde(),
            4 => self.cauchy_cross_oracle(),
            5 => self.derivative_representation(),
            6 => self.regime_closed_forms(),
            7 => self.degenerate_reduction(),
            8 => self.value_objective(),
            9 => self.intra_equilibrium(),
            10 => self.figure1_defaults(),
            11 => self.figure2_defaults(),
            12 => self.determinism(),
            other => Err(VerifyError::UnknownCriterion(other)),
        };
        let (passed, details) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        CriterionResult {
            id,
            name: CRITERION_NAMES[(id as usize - 1).min(11)].to_string(),
            passed,
            details,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    fn shared_tables<'a>(
        &'a self,
        cell: &'a OnceLock<TableSet>,
        market: &MarketParams,
        investors: &[InvestorParams],
    ) -> Result<&'a TableSet, VerifyError> {
        if let Some(set) = cell.get() {
            return Ok(set);
        }
        let coeff = compute_coefficients(investors)?;
        let set = load_or_build_tables(
            market,
            investors,
            &coeff.kappa,
            &TableConfig::default(),
            DEFAULT_CLAMP_EPS,
            &self.cache_dir,
        )?;
        Ok(cell.get_or_init(|| set))
    }

    fn fig1_tables(&self) -> Result<&TableSet, VerifyError> {
        self.shared_tables(&self.fig1_tables, &figure1_market(), &figure1_investors())
    }

    fn fig2_tables(&self) -> Result<&TableSet, VerifyError> {
        self.shared_tables(&self.fig2_tables, &figure2_market(), &figure2_investors())
    }

    /// 1 — with the true drift high, the posterior has learned it (> 0.99)
    /// by T = 50 in at least 95% of paths.
    fn filter_learning(&self) -> Result<(bool, String), VerifyError> {
        let market = MarketParams { horizon: 50.0, ..figure1_market() };
        let grid = TimeGrid::new(0.0, market.horizon, 5000)?;
        let n_paths = 1000u64;
        let converged: Result<Vec<bool>, VerifyError> = (0..n_paths)
            .into_par_iter()
            .map(|path| {
                let mut rng = stream(0xF117, path, Purpose::Brownian, 0);
                let bundle = PathBundle::generate(grid, &mut rng, (0xF117, path));
                let truth = simulate_truth(1.0, &market, &bundle)?;
                let post = posterior_from_observations(
                    0.5,
                    &market,
                    grid,
                    &truth.log_stock,
                    DEFAULT_CLAMP_EPS,
                )?;
                Ok(*post.values.last().unwrap() > 0.99)
            })
            .collect();
        let converged = converged?;
        let frac = converged.iter().filter(|&&c| c).count() as f64 / n_paths as f64;
        Ok((
            frac >= 0.95,
            format!("posterior(T=50) > 0.99 in {:.1}% of {} paths (need ≥ 95%)", 100.0 * frac, n_paths),
        ))
    }

    /// 2 — the filter stays inside (0,1): clamp rate below 0.1% of steps in
    /// both drift modes at dt = 10⁻³.
    fn posterior_boundary(&self) -> Result<(bool, String), VerifyError> {
        let mut lines = Vec::new();
        let mut ok = true;
        for (label, market) in [("constant", figure1_market()), ("alternating", figure2_market())] {
            let n_steps = 10_000usize;
            let grid = TimeGrid::new(0.0, market.horizon, n_steps)?;
            let n_paths = 10_000u64;
            let clamps: Result<Vec<usize>, VerifyError> = (0..n_paths)
                .into_par_iter()
                .map(|path| {
                    let mut rng = stream(0xB0B0, path, Purpose::Brownian, 0);
                    let bundle = PathBundle::generate(grid, &mut rng, (0xB0B0, path));
                    let post =
                        simulate_posterior(0.5, &market, &bundle, Measure::P, DEFAULT_CLAMP_EPS)?;
                    Ok(post.clamp_events)
                })
                .collect();
            let total: usize = clamps?.iter().sum();
            let rate = total as f64 / (n_paths as f64 * n_steps as f64);
            ok &= rate < 1e-3;
            lines.push(format!("{label}: clamp rate {:.4}%", 100.0 * rate));
        }
        Ok((ok, format!("{} (need < 0.1% each)", lines.join("; "))))
    }

    /// 3 — exact Bayesian posterior vs Euler filter: max deviation ≤ 10⁻² at
    /// dt = 10⁻⁴ over T = 1, and shrinking when dt is halved.
    fn closed_vs_sde(&self) -> Result<(bool, String), VerifyError> {
        let market = MarketParams { horizon: 1.0, ..figure1_market() };
        let max_dev = |n_steps: usize| -> Result<f64, VerifyError> {
            let grid = TimeGrid::new(0.0, 1.0, n_steps)?;
            let devs: Result<Vec<f64>, VerifyError> = (0..50u64)
                .into_par_iter()
                .map(|path| {
                    let mut rng = stream(0xC3, path, Purpose::Brownian, 0);
                    let bundle = PathBundle::generate(grid, &mut rng, (0xC3, path));
                    let truth = simulate_truth(1.0, &market, &bundle)?;
                    let exact = posterior_closed_form(0.5, &market, grid, &truth.log_stock)?;
                    let euler = posterior_from_observations(
                        0.5,
                        &market,
                        grid,
                        &truth.log_stock,
                        DEFAULT_CLAMP_EPS,
                    )?;
                    Ok(exact
                        .iter()
                        .zip(&euler.values)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max))
                })
                .collect();
            Ok(devs?.into_iter().fold(0.0, f64::max))
        };
        let coarse = max_dev(10_000)?;
        let fine = max_dev(20_000)?;
        Ok((
            coarse <= 1e-2 && fine < coarse,
            format!("max deviation {coarse:.2e} at dt=1e-4 (need ≤ 1e-2), {fine:.2e} at dt=5e-5 (need smaller)"),
        ))
    }

    /// 4 — cross-oracle on the first Cauchy problem: the n = 64
    /// finite-difference solve agrees within 3% with the stopped Monte-Carlo
    /// representation of the same nested-domain object at 9 interior probes;
    /// the nested solves increase monotonically in n and stay dominated by
    /// the unstopped Monte-Carlo base function.
    fn cauchy_cross_oracle(&self) -> Result<(bool, String), VerifyError> {
        let market = figure1_market();
        let set = self.fig1_tables()?;
        let cfg = FdConfig { n_space: 512, n_time: 1024, domain_n: 64 };
        let nested = solve_first_fd_nested(&market, &cfg, &[8, 16, 32, 64])?;
        let finest = nested.finest();
        let tol_mono = 1e-3 * finest.max_abs();
        let mc = McConfig { n_paths: 20_000, n_steps: 2000, seed: 0x40C, clamp_eps: DEFAULT_CLAMP_EPS };
        let mut worst = 0.0f64;
        let mut monotone = true;
        let mut dominated = true;
        for &t in &[2.5, 5.0, 7.5] {
            for &p in &[0.25, 0.5, 0.75] {
                let stopped = estimate_base_c_stopped(&market, t, p, 64, &mc)?;
                let fd = finest.interp(t, p);
                worst = worst.max((stopped.mean - fd).abs() / fd.abs().max(1e-12));
                monotone &= nested.is_monotone_at(t, p, tol_mono);
                let full = set.base.c.interp(t, p);
                let se = set.base.se_c.interp(t, p);
                dominated &= fd <= full + 3.0 * se;
            }
        }
        Ok((
            worst <= 0.03 && monotone && dominated,
            format!(
                "max relative FD-vs-stopped-MC gap {:.2}% over 9 probes (need ≤ 3%); nested domains monotone: {monotone}; dominated by unstopped MC: {dominated}",
                100.0 * worst
            ),
        ))
    }

    /// 5 — tangent-process ∂ₚc vs a common-random-number central difference
    /// of c, and exact zero in the degenerate μ₁ = μ₂ case.
    fn derivative_representation(&self) -> Result<(bool, String), VerifyError> {
        let market = figure1_market();
        let cfg = McConfig { n_paths: 20_000, n_steps: 1000, seed: 0x5e7a, clamp_eps: DEFAULT_CLAMP_EPS };
        let mut lines = Vec::new();
        let mut ok = true;
        for &(t, p) in &[(0.0, 0.5), (5.0, 0.25), (7.5, 0.75)] {
            let zeta = estimate_base_dc(&market, t, p, &cfg)?;
            let (crn_mean, crn_se) = crn_dc_estimate(&market, t, p, 1e-3, 20_000, 1000, 0xCAFE)?;
            let gap = (zeta.mean - crn_mean).abs();
            let tol = (3.0 * (zeta.std_error.powi(2) + crn_se.powi(2)).sqrt())
                .max(0.02 * zeta.mean.abs());
            ok &= gap <= tol;
            lines.push(format!("(t={t},p={p}): ζ {:.4} vs CRN {:.4} (gap {:.1e}, tol {:.1e})", zeta.mean, crn_mean, gap, tol));
        }
        let degenerate = MarketParams { mu1: 0.15, mu2: 0.15, horizon: 2.0, ..figure1_market() };
        let small = McConfig { n_paths: 64, n_steps: 100, seed: 7, clamp_eps: DEFAULT_CLAMP_EPS };
        let zero = estimate_base_dc(&degenerate, 0.0, 0.4, &small)?;
        ok &= zero.mean == 0.0;
        lines.push(format!("degenerate ∂ₚc = {} (need exactly 0)", zero.mean));
        Ok((ok, lines.join("; ")))
    }

    /// 6 — regime-chain closed forms (both cᵢ and the value offset Cᵢ) vs a
    /// brute-force chain Monte Carlo with exact occupation times.
    fn regime_closed_forms(&self) -> Result<(bool, String), VerifyError> {
        let market = figure2_market();
        let investors = figure2_investors();
        let coeff = compute_coefficients(&investors)?;
        let n_paths = 20_000;
        let h1 = crate::cauchy::closed::squared_sharpe(&market, market.mu1);
        let h2 = crate::cauchy::closed::squared_sharpe(&market, market.mu2);
        let mut ok = true;
        let mut worst_z = 0.0f64;
        for m in [1u8, 2u8] {
            let (mc, se) = chain_payoff_mc(&market, 0.0, h1, h2, m, n_paths, 0x6a1)?;
            let closed = c_markov(1.0, &market, 0.0, m);
            let z = (closed - mc).abs() / se.max(1e-15);
            worst_z = worst_z.max(z);
            ok &= (closed - mc).abs() <= 3.0 * se;
            for &i in &[0usize, 9usize] {
                let g1 = value_slope_markov(&market, 1, &investors[i], &coeff, i, ADOPTED_SIGN);
                let g2 = value_slope_markov(&market, 2, &investors[i], &coeff, i, ADOPTED_SIGN);
                let (mc_c, se_c) =
                    chain_payoff_mc(&market, 0.0, g1, g2, m, n_paths, 0x6a2 + i as u64)?;
                let closed_c = value_offset_markov(&market, &investors[i], &coeff, i, 0.0, m, ADOPTED_SIGN);
                let z = (closed_c - mc_c).abs() / se_c.max(1e-15);
                worst_z = worst_z.max(z);
                ok &= (closed_c - mc_c).abs() <= 3.0 * se_c;
            }
        }
        Ok((ok, format!("worst |closed − MC| = {worst_z:.2} SE over both regimes (need ≤ 3 SE)")))
    }

    /// 7 — μ₁ = μ₂ collapses the filter, and the partial-information
    /// strategy must equal the known-constant-μ strategy to 10⁻¹².
    fn degenerate_reduction(&self) -> Result<(bool, String), VerifyError> {
        let market = MarketParams { mu1: 0.15, mu2: 0.15, ..figure1_market() };
        let investors = figure1_investors();
        let coeff = compute_coefficients(&investors)?;
        let mc = McConfig { n_paths: 8, n_steps: 64, seed: 1, clamp_eps: DEFAULT_CLAMP_EPS };
        let tables = crate::cauchy::build_base_tables(
            &market,
            &[0.0, 2.5, 5.0, 7.5, 10.0],
            &[0.05, 0.275, 0.5, 0.725, 0.95],
            &mc,
        )?;
        let mut worst = 0.0f64;
        for &t in &[0.0, 2.5, 5.0, 7.5, 9.5] {
            for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                for (i, inv) in investors.iter().enumerate() {
                    let partial = strategy_value(
                        StrategyKind::PartialInfo,
                        &market,
                        &coeff,
                        inv,
                        i,
                        t,
                        StateView::Posterior(p),
                        Some(&tables.dc),
                    )?;
                    let full = strategy_value(
                        StrategyKind::FullInfoConstant { mu: 0.15 },
                        &market,
                        &coeff,
                        inv,
                        i,
                        t,
                        StateView::None,
                        None,
                    )?;
                    worst = worst.max((partial - full).abs());
                }
            }
        }
        Ok((worst <= 1e-12, format!("max |partial − full| = {worst:.2e} over probe grid (need ≤ 1e-12)")))
    }

    /// 8 — the ansatz value function matches the simulated objective at the
    /// equilibrium on a 3×3 (t,p) probe grid, and the sign variant of the
    /// per-time value slope is adjudicated by the same comparison.
    fn value_objective(&self) -> Result<(bool, String), VerifyError> {
        let market = figure1_market();
        let investors = figure1_investors();
        let coeff = compute_coefficients(&investors)?;
        let set = self.fig1_tables()?;
        let dc = Arc::new(set.base.dc.clone());
        let inv0 = investors[0];

        // Value offset C₀ via the second finite-difference solve, sourced
        // from the shared table (the idealized representation, used for the
        // FD-vs-MC cross-check below).
        let mut rmax = 0.0f64;
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            for &t in &set.base.dc.t_nodes {
                let d = set.base.dc.interp(t, p);
                rmax = rmax.max(r_source_from_base(&market, &inv0, &coeff, 0, p, d).abs());
            }
        }
        let fd_cfg = FdConfig { n_space: 256, n_time: 512, domain_n: 64 };
        let cfd = solve_second_fd(
            &market,
            &fd_cfg,
            |u, p| r_source_from_base(&market, &inv0, &coeff, 0, p, set.base.dc.interp(u, p)),
            1.5 * rmax * market.horizon,
        )?;

        // Value offset of the game as actually played. The simulated
        // strategies read the tabulated base derivative D̂, which cannot
        // carry the steep growth of the true ∂ₚb near p = 1 — where the
        // filter settles — so the played game differs measurably from the
        // idealized one there. Its exact offset still comes from the second
        // Cauchy problem, split into the mean-to-go b̃ (source φ² − βφD̂)
        // and variance-to-go v (squared volatility of the hedged wealth,
        // φ − β(D̂ − ∂ₚb̃)): C = g·b̃ − (γ/2)κ²·v. When D̂ equals the exact
        // derivative the two sources collapse back to Rᵢ.
        let dhat = |u: f64, p: f64| set.base.dc.interp(u, p);
        let phi = |p: f64| market.risk_price(p);
        let btilde = solve_second_fd(
            &market,
            &fd_cfg,
            |u, p| phi(p) * (phi(p) - market.beta(p) * dhat(u, p)),
            10.0 * rmax * market.horizon,
        )?;
        let dbtilde = {
            let h = 1e-3;
            let bt = btilde.clone();
            move |u: f64, p: f64| (bt.interp(u, p + h) - bt.interp(u, p - h)) / (2.0 * h)
        };
        let vtg = solve_second_fd(
            &market,
            &fd_cfg,
            |u, p| {
                let g = phi(p) - market.beta(p) * (dhat(u, p) - dbtilde(u, p));
                g * g
            },
            10.0 * rmax * market.horizon,
        )?;
        let kap0 = coeff.kappa[0];
        let g_mean = kap0
            + (inv0.lambda_v - inv0.lambda_m) / (1.0 - coeff.lambda_v_bar) * coeff.kappa_bar;
        let played_offset =
            |t: f64, p: f64| g_mean * btilde.interp(t, p) - 0.5 * inv0.gamma * kap0 * kap0 * vtg.interp(t, p);

        let mut lines = Vec::new();
        let mut ok = true;
        for &t in &[1.25, 5.0, 8.75] {
            for &p in &[0.25, 0.5, 0.75] {
                let c_off = played_offset(t, p);
                let v = value_function(&market, &inv0, &vec![1.0; 10], 0, t, c_off);
                let spec = ProbeSpec {
                    market: market.clone(),
                    investors: investors.clone(),
                    coeff: coeff.clone(),
                    strategies: vec![
                        InvestorStrategy::unperturbed(StrategyKind::PartialInfo);
                        10
                    ],
                    dc_base: Some(dc.clone()),
                    initial_wealth: vec![1.0; 10],
                    t0: t,
                    drift: ProbeDrift::Filtered { p0: p },
                    n_steps: (((market.horizon - t) * 200.0).round() as usize).max(100),
                    clamp_eps: DEFAULT_CLAMP_EPS,
                    seed: 0x0815,
                };
                let terminal = probe_terminal_wealth(&spec, 4000)?;
                let obj = objective_from_terminal(&probe_terminal_samples(&terminal, 0), &inv0, 32)?;
                let gap = (v - obj.value).abs();
                ok &= gap <= 3.0 * obj.std_error;
                lines.push(format!("(t={t},p={p}): V {v:.3} vs J {:.3} ± {:.3}", obj.value, obj.std_error));
            }
        }

        // Monte-Carlo cross-check of the finite-difference value offset.
        let mc = McConfig { n_paths: 4000, n_steps: 1000, seed: 0xC0FF, clamp_eps: DEFAULT_CLAMP_EPS };
        let est = estimate_value_offset(&market, &investors, &coeff, 0, &set.base.dc, 5.0, 0.5, &mc)?;
        let fd_c = cfd.interp(5.0, 0.5);
        let cross_ok = (est.mean - fd_c).abs() <= 3.0 * est.std_error + 0.01 * fd_c.abs();
        ok &= cross_ok;
        lines.push(format!("C(5,0.5): FD {fd_c:.4} vs MC {:.4} ± {:.4}", est.mean, est.std_error));

        // Sign adjudication on an asymmetric-λ constant-μ scenario, where
        // the two variants differ sharply.
        let asym = investors_gamma_ramp(10, 8.0, 0.1, 0.2, 0.7);
        let coeff_a = compute_coefficients(&asym)?;
        let mu = market.mu1;
        let t0 = 5.0;
        let delta_t = market.horizon - t0;
        let spec = ProbeSpec {
            market: market.clone(),
            investors: asym.clone(),
            coeff: coeff_a.clone(),
            strategies: vec![
                InvestorStrategy::unperturbed(StrategyKind::FullInfoConstant { mu });
                10
            ],
            dc_base: None,
            initial_wealth: vec![1.0; 10],
            t0,
            drift: ProbeDrift::Known(mu),
            n_steps: 1000,
            clamp_eps: DEFAULT_CLAMP_EPS,
            seed: 0xAD90,
        };
        let terminal = probe_terminal_wealth(&spec, 20_000)?;
        let obj = objective_from_terminal(&probe_terminal_samples(&terminal, 0), &asym[0], 40)?;
        let value_of = |variant| {
            let slope = value_slope_const(&market, mu, &asym[0], &coeff_a, 0, variant);
            value_function(&market, &asym[0], &vec![1.0; 10], 0, t0, delta_t * slope)
        };
        let v_plus = value_of(SignVariant::Plus);
        let v_minus = value_of(SignVariant::Minus);
        let plus_ok = (v_plus - obj.value).abs() <= 3.0 * obj.std_error;
        let minus_rejected = (v_minus - obj.value).abs() > 3.0 * obj.std_error;
        ok &= plus_ok && minus_rejected;
        lines.push(format!(
            "sign adjudication: J {:.3} ± {:.3}, plus-variant V {v_plus:.3} (match: {plus_ok}), minus-variant V {v_minus:.3} (rejected: {minus_rejected})",
            obj.value, obj.std_error
        ));
        Ok((ok, lines.join("; ")))
    }

    /// 9 — no small constant perturbation over a short window improves the
    /// equilibrium objective by more than 2 joint SE, while the same test
    /// applied to an off-equilibrium profile does find improvements.
    fn intra_equilibrium(&self) -> Result<(bool, String), VerifyError> {
        let market = figure1_market();
        let investors = figure1_investors();
        let coeff = compute_coefficients(&investors)?;
        let mu = market.mu1;
        let n_paths = 10_000;
        let n_batches = 50;
        let base_spec = |kind: StrategyKind| ProbeSpec {
            market: market.clone(),
            investors: investors.clone(),
            coeff: coeff.clone(),
            strategies: vec![InvestorStrategy::unperturbed(kind); 10],
            dc_base: None,
            initial_wealth: vec![1.0; 10],
            t0: 0.0,
            drift: ProbeDrift::Known(mu),
            n_steps: 1000,
            clamp_eps: DEFAULT_CLAMP_EPS,
            seed: 0x19A9,
        };
        // The control profile underestimates the risk premium by half, so a
        // positive perturbation moves towards the equilibrium and must help.
        let control_mu = market.r + 0.5 * (mu - market.r);
        let mut any_eq_improvement = false;
        let mut control_improvement = false;
        let mut lines = Vec::new();
        for (label, kind) in [
            ("equilibrium", StrategyKind::FullInfoConstant { mu }),
            ("control", StrategyKind::FullInfoConstant { mu: control_mu }),
        ] {
            let spec0 = base_spec(kind);
            let base = probe_terminal_wealth(&spec0, n_paths)?;
            let mut best_z = f64::NEG_INFINITY;
            for &delta in &[0.5, -0.5, 1.0, -1.0] {
                for &h in &[0.05, 0.1] {
                    let mut spec = spec0.clone();
                    spec.strategies[0].perturbation =
                        Some(Perturbation { delta, t_start: 0.0, t_end: h });
                    let pert = probe_terminal_wealth(&spec, n_paths)?;
                    let (dj, se) =
                        paired_objective_gap(&pert, &base, &investors[0], 0, n_batches)?;
                    let z = dj / se.max(1e-15);
                    best_z = best_z.max(z);
                    let significant = dj > 2.0 * se;
                    match label {
                        "equilibrium" => any_eq_improvement |= significant,
                        _ => control_improvement |= significant,
                    }
                }
            }
            lines.push(format!("{label}: best ΔJ = {best_z:.1} joint SE"));
        }
        let ok = !any_eq_improvement && control_improvement;
        Ok((
            ok,
            format!("{} (equilibrium must stay ≤ 2 SE, control must exceed it)", lines.join("; ")),
        ))
    }

    /// 10 — constant-drift systemic-risk experiment: no defaults under full
    /// information, and all ten investors defaulting with probability in
    /// [0.20, 0.50] under partial information.
    fn figure1_defaults(&self) -> Result<(bool, String), VerifyError> {
        let market = figure1_market();
        let investors = figure1_investors();
        let coeff = compute_coefficients(&investors)?;
        let setup = |kind: StrategyKind, dc| GameSetup {
            market: market.clone(),
            investors: investors.clone(),
            coeff: coeff.clone(),
            strategies: vec![InvestorStrategy::unperturbed(kind); 10],
            dc_base: dc,
            initial_wealth: vec![1.1; 10],
            prior: 0.5,
            n_steps: 10_000,
            clamp_eps: DEFAULT_CLAMP_EPS,
            seed: 0x0F16,
        };
        let full = setup(StrategyKind::FullInfoConstant { mu: market.mu1 }, None);
        let full_dist = aggregate_losses(&run_summaries(&full, 100)?, 10);
        let no_defaults = full_dist.histogram[0] == 100;
        let set = self.fig1_tables()?;
        let partial = setup(StrategyKind::PartialInfo, Some(Arc::new(set.base.dc.clone())));
        let partial_dist = aggregate_losses(&run_summaries(&partial, 100)?, 10);
        let p_all = partial_dist.all_default_probability();
        let ok = no_defaults && (0.20..=0.50).contains(&p_all);
        Ok((
            ok,
            format!(
                "full info: {} of 100 realizations default-free (need 100); partial info: P(all 10 default) = {p_all:.2} (need in [0.20, 0.50])",
                full_dist.histogram[0]
            ),
        ))
    }

    /// 11 — regime-switching systemic-risk experiment: hiding the regime
    /// raises the all-default probability by at least 5 percentage points
    /// from a full-information level in [0.25, 0.60].
    fn figure2_defaults(&self) -> Result<(bool, String), VerifyError> {
        let market = figure2_market();
        let investors = figure2_investors();
        let coeff = compute_coefficients(&investors)?;
        let setup = |kind: StrategyKind, dc| GameSetup {
            market: market.clone(),
            investors: investors.clone(),
            coeff: coeff.clone(),
            strategies: vec![InvestorStrategy::unperturbed(kind); 10],
            dc_base: dc,
            initial_wealth: vec![4.5; 10],
            prior: 0.5,
            n_steps: 10_000,
            clamp_eps: DEFAULT_CLAMP_EPS,
            seed: 0x0F26,
        };
        let full = setup(StrategyKind::FullInfoMarkov, None);
        let p_full = aggregate_losses(&run_summaries(&full, 100)?, 10).all_default_probability();
        let set = self.fig2_tables()?;
        let partial = setup(StrategyKind::PartialInfo, Some(Arc::new(set.base.dc.clone())));
        let p_partial =
            aggregate_losses(&run_summaries(&partial, 100)?, 10).all_default_probability();
        let ok = (0.25..=0.60).contains(&p_full) && p_partial - p_full >= 0.05;
        Ok((
            ok,
            format!("P(all default): full {p_full:.2} (need in [0.25, 0.60]), partial {p_partial:.2} (need ≥ full + 0.05)"),
        ))
    }

    /// 12 — re-running a simulation from its manifest reproduces every
    /// artifact byte-for-byte.
    fn determinism(&self) -> Result<(bool, String), VerifyError> {
        let config = ScenarioConfig::from_str(DETERMINISM_CONFIG)?;
        let dir_a = self.cache_dir.join("determinism-a");
        let dir_b = self.cache_dir.join("determinism-b");
        for d in [&dir_a, &dir_b] {
            if d.exists() {
                std::fs::remove_dir_all(d)?;
            }
        }
        run_simulate_pipeline(&config, &dir_a, &self.cache_dir, 2, 50)?;
        let manifest = Manifest::load(&dir_a.join("manifest.json"))?;
        run_simulate_pipeline(&manifest.config, &dir_b, &self.cache_dir, 2, 50)?;
        let mut identical = true;
        let mut files = manifest.artifacts.clone();
        files.push("manifest.json".to_string());
        for name in &files {
            identical &= std::fs::read(dir_a.join(name))? == std::fs::read(dir_b.join(name))?;
        }
        Ok((
            identical,
            format!("{} artifacts regenerated from the manifest, byte-identical: {identical}", files.len()),
        ))
    }
}

const DETERMINISM_CONFIG: &str = r#"
[market]
r = 0.05
sigma = 0.1
mu1 = 0.2
mu2 = 0.02
q1 = 10.0
q2 = 10.0
horizon = 10.0
drift_mode = { kind = "constant_unknown", high = true }

[investors]
count = 3
gamma0 = 8.0
gamma_step = 0.1
lambda_m = 0.5
lambda_v = 0.5

[strategy]
information = "full"

[simulation]
n_steps = 200
realizations = 5
seed = 11
"#;

/// Common-random-number central difference of the base function c in p:
/// both bumped filters share each path's Brownian increments, so the
/// difference quotient is itself a per-path sample with its own SE.
fn crn_dc_estimate(
    market: &MarketParams,
    t: f64,
    p: f64,
    h: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<(f64, f64), VerifyError> {
    let grid = TimeGrid::new(t, market.horizon, n_steps)?;
    let dt = grid.dt();
    let integral = |path: &crate::filtering::PosteriorPath| -> f64 {
        path.values[..grid.n_steps]
            .iter()
            .map(|&pu| market.risk_price(pu).powi(2) * dt)
            .sum()
    };
    let samples: Result<Vec<f64>, VerifyError> = (0..n_paths as u64)
        .into_par_iter()
        .map(|lane| {
            let mut rng = stream(seed, lane, Purpose::Estimator, 2);
            let bundle = PathBundle::generate(grid, &mut rng, (seed, lane));
            let up = simulate_posterior(p + h, market, &bundle, Measure::Q, DEFAULT_CLAMP_EPS)?;
            let down = simulate_posterior(p - h, market, &bundle, Measure::Q, DEFAULT_CLAMP_EPS)?;
            Ok((integral(&up) - integral(&down)) / (2.0 * h))
        })
        .collect();
    Ok(mean_se(&samples?))
}

/// Exact conditional occupation-time Monte Carlo for the two-state chain:
/// E[∫ₜᵀ g_{M(u)} du | M(t) = m0] with per-regime payoffs (g₁, g₂), using
/// exponential holding times rather than a discretized path.
fn chain_payoff_mc(
    market: &MarketParams,
    t: f64,
    g1: f64,
    g2: f64,
    m0: u8,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64), VerifyError> {
    let delta = market.horizon - t;
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|lane| {
            let mut rng = stream(seed, lane, Purpose::Chain, 0);
            let mut state = m0;
            let mut elapsed = 0.0f64;
            let mut integral = 0.0f64;
            while elapsed < delta {
                let (rate, g) = if state == 1 { (market.q1, g1) } else { (market.q2, g2) };
                let hold: f64 = rng.sample(Exp::new(rate).expect("positive rate"));
                let stay = hold.min(delta - elapsed);
                integral += g * stay;
                elapsed += hold;
                state = if state == 1 { 2 } else { 1 };
            }
            integral
        })
        .collect();
    Ok(mean_se(&samples))
}

/// Objective gap Jᵢ(perturbed) − Jᵢ(base) from paired path sets, with a
/// paired batch-means SE (the two runs share Brownian paths index-by-index,
/// so the per-batch differences carry the common-random-number variance
/// reduction).
fn paired_objective_gap(
    perturbed: &[Vec<f64>],
    base: &[Vec<f64>],
    investor: &InvestorParams,
    i: usize,
    n_batches: usize,
) -> Result<(f64, f64), VerifyError> {
    let pert_samples = probe_terminal_samples(perturbed, i);
    let base_samples = probe_terminal_samples(base, i);
    let j_pert = objective_from_terminal(&pert_samples, investor, n_batches)?;
    let j_base = objective_from_terminal(&base_samples, investor, n_batches)?;
    let n = pert_samples.len();
    let batch_len = n / n_batches;
    let diffs: Result<Vec<f64>, VerifyError> = (0..n_batches)
        .map(|b| {
            let lo = b * batch_len;
            let hi = lo + batch_len;
            let p = objective_from_terminal(&pert_samples[lo..hi], investor, 2)?;
            let q = objective_from_terminal(&base_samples[lo..hi], investor, 2)?;
            Ok(p.value - q.value)
        })
        .collect();
    let (_, se) = mean_se(&diffs?);
    // The SE of the mean of batch differences estimates the SE of ΔJ.
    Ok((j_pert.value - j_base.value, se))
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_partition_the_criteria() {
        let mut all: Vec<u32> = [Suite::Filter, Suite::Cauchy, Suite::Equilibrium, Suite::Figures]
            .iter()
            .flat_map(|s| s.criteria().iter().copied())
            .collect();
        all.sort_unstable();
        assert_eq!(all, all_criteria());
        assert_eq!("cauchy".parse::<Suite>().unwrap(), Suite::Cauchy);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn unknown_criterion_reports_failure() {
        let v = Verifier::new(std::env::temp_dir().join("mvgame-verify-test"));
        let res = v.criterion(99);
        assert!(!res.passed);
        assert!(res.details.contains("unknown criterion"));
    }

    #[test]
    fn degenerate_reduction_criterion_passes() {
        let v = Verifier::new(std::env::temp_dir().join("mvgame-verify-test"));
        let res = v.criterion(7);
        assert!(res.passed, "{}", res.details);
        assert_eq!(res.name, "degenerate-reduction");
    }

    #[test]
    fn chain_payoff_mc_matches_degenerate_payoff() {
        // g₁ = g₂ makes the occupation integral deterministic: g·(T−t).
        let market = figure2_market();
        let (mean, se) = chain_payoff_mc(&market, 4.0, 2.5, 2.5, 1, 64, 3).unwrap();
        approx::assert_relative_eq!(mean, 2.5 * 6.0, max_relative = 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn mean_se_of_constant_samples() {
        let (m, se) = mean_se(&[3.0, 3.0, 3.0, 3.0]);
        assert_eq!(m, 3.0);
        assert_eq!(se, 0.0);
    }
}
