//! The equilibrium strategy families, their value functions, and the
//! Monte-Carlo estimate of the mean-variance objective Jᵢ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchy::CauchyTable;
use crate::model::{EquilibriumCoefficients, InvestorParams, MarketParams};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("strategy kind requires a ∂ₚc table but none was given")]
    MissingTable,
    #[error("strategy kind `{kind}` cannot read state `{state}`")]
    StateMismatch { kind: &'static str, state: &'static str },
    #[error("empty strategy vector")]
    Empty,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// The strategy families the engine can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    /// Constant known μ: the stock weight never reacts to the market state.
    FullInfoConstant { mu: f64 },
    /// Observable regime chain: μ(m) switches with the regime.
    FullInfoMarkov,
    /// Filter-based equilibrium: risk-premium term plus ∂ₚc correction.
    PartialInfo,
    /// The first (myopic) term of the filter-based strategy only.
    PartialInfoFirstTermOnly,
    /// No stock position (riskfree accrual only).
    Zero,
}

impl StrategyKind {
    fn name(&self) -> &'static str {
        match self {
            StrategyKind::FullInfoConstant { .. } => "full_info_constant",
            StrategyKind::FullInfoMarkov => "full_info_markov",
            StrategyKind::PartialInfo => "partial_info",
            StrategyKind::PartialInfoFirstTermOnly => "partial_info_first_term_only",
            StrategyKind::Zero => "zero",
        }
    }

    pub fn needs_table(&self) -> bool {
        matches!(self, StrategyKind::PartialInfo)
    }
}

/// What a strategy is allowed to observe at decision time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateView {
    /// Filter value p ∈ (0,1) (partial information).
    Posterior(f64),
    /// Chain regime m ∈ {1,2} (full information, alternating mode).
    Regime(u8),
    /// Nothing beyond time (full information, constant mode).
    None,
}

impl StateView {
    fn name(&self) -> &'static str {
        match self {
            StateView::Posterior(_) => "posterior",
            StateView::Regime(_) => "regime",
            StateView::None => "none",
        }
    }
}

/// Dollar amount invested in the stock by investor `i` at (t, state).
///
/// `dc_base` is the base-derivative table (∂ₚcᵢ = κᵢ·table value), required
/// only by `PartialInfo`.
pub fn strategy_value(
    kind: StrategyKind,
    market: &MarketParams,
    coeff: &EquilibriumCoefficients,
    investor: &InvestorParams,
    i: usize,
    t: f64,
    state: StateView,
    dc_base: Option<&CauchyTable>,
) -> Result<f64, EquilibriumError> {
    let discount = (-market.r * (market.horizon - t)).exp();
    let load = coeff.kappa[i] + coeff.amplification(investor) * coeff.kappa_bar;
    match kind {
        StrategyKind::Zero => Ok(0.0),
        StrategyKind::FullInfoConstant { mu } => {
            Ok(discount * (mu - market.r) / (market.sigma * market.sigma) * load)
        }
        StrategyKind::FullInfoMarkov => match state {
            StateView::Regime(m) => {
                let mu = market.mu_of_state(m);
                Ok(discount * (mu - market.r) / (market.sigma * market.sigma) * load)
            }
            other => Err(EquilibriumError::StateMismatch { kind: kind.name(), state: other.name() }),
        },
        StrategyKind::PartialInfo | StrategyKind::PartialInfoFirstTermOnly => match state {
            StateView::Posterior(p) => {
                let myopic = (market.theta(p) - market.r) / (market.sigma * market.sigma) * load;
                let correction = if kind == StrategyKind::PartialInfo {
                    let table = dc_base.ok_or(EquilibriumError::MissingTable)?;
                    // ∂ₚcᵢ + amp·∂ₚc̄ = (κᵢ + amp·κ̄)·D = load·D
                    market.beta(p) / market.sigma * load * table.interp(t, p)
                } else {
                    0.0
                };
                Ok(discount * (myopic - correction))
            }
            other => Err(EquilibriumError::StateMismatch { kind: kind.name(), state: other.name() }),
        },
    }
}

/// Arithmetic mean of per-investor strategy values at a common (t, state).
pub fn aggregate_strategy(values: &[f64]) -> Result<f64, EquilibriumError> {
    if values.is_empty() {
        return Err(EquilibriumError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Closed-form aggregate of the partial-information equilibrium:
/// π̄* = (1−λ̄ⱽ)⁻¹e^{−r(T−t)}{κ̄(θ(p)−r)/σ² − (β(p)/σ)∂ₚc̄}.
pub fn aggregate_partial_closed(
    market: &MarketParams,
    coeff: &EquilibriumCoefficients,
    t: f64,
    p: f64,
    dc_base: &CauchyTable,
) -> f64 {
    let discount = (-market.r * (market.horizon - t)).exp();
    let dc_bar = coeff.kappa_bar * dc_base.interp(t, p);
    discount / (1.0 - coeff.lambda_v_bar)
        * (coeff.kappa_bar * (market.theta(p) - market.r) / (market.sigma * market.sigma)
            - market.beta(p) / market.sigma * dc_bar)
}

/// Value function in ansatz form:
/// Vᵢ = Aᵢ(t)xᵢ + Bᵢ(t)x̄₍₋ᵢ₎ + C, with Aᵢ = (1−λᵢᴹ/N)e^{r(T−t)},
/// Bᵢ = −λᵢᴹe^{r(T−t)}, and x̄₍₋ᵢ₎ = (1/N)Σ_{j≠i}xⱼ.
pub fn value_function(
    market: &MarketParams,
    investor: &InvestorParams,
    wealth: &[f64],
    i: usize,
    t: f64,
    c_offset: f64,
) -> f64 {
    let n = wealth.len() as f64;
    let growth = (market.r * (market.horizon - t)).exp();
    let a = (1.0 - investor.lambda_m / n) * growth;
    let b = -investor.lambda_m * growth;
    let mean_others = (wealth.iter().sum::<f64>() - wealth[i]) / n;
    a * wealth[i] + b * mean_others + c_offset
}

/// The mean-variance objective Jᵢ with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEstimate {
    /// E[Xᵢ(T) − λᵢᴹX̄(T)].
    pub mean_term: f64,
    /// Var[Xᵢ(T) − λᵢⱽX̄(T)].
    pub variance_term: f64,
    /// Jᵢ = mean_term − (γᵢ/2)·variance_term.
    pub value: f64,
    /// Batch-means standard error of `value`.
    pub std_error: f64,
    pub n_paths: usize,
}

/// Computes Jᵢ from joint terminal samples (Xᵢ(T), X̄(T)).
///
/// The standard error comes from batch means: the samples are split into
/// `n_batches` consecutive batches, Jᵢ is recomputed per batch, and the SE is
/// the spread of the batch values — which correctly propagates the
/// nonlinearity of the variance term.
pub fn objective_from_terminal(
    terminal: &[(f64, f64)],
    investor: &InvestorParams,
    n_batches: usize,
) -> Result<ObjectiveEstimate, EquilibriumError> {
    let n = terminal.len();
    let n_batches = n_batches.max(2);
    if n < 2 * n_batches {
        return Err(EquilibriumError::TooFewSamples { needed: 2 * n_batches, got: n });
    }
    let stats = |chunk: &[(f64, f64)]| -> (f64, f64) {
        let m = chunk.len() as f64;
        let mean_g = chunk.iter().map(|&(x, xb)| x - investor.lambda_m * xb).sum::<f64>() / m;
        let mean_h = chunk.iter().map(|&(x, xb)| x - investor.lambda_v * xb).sum::<f64>() / m;
        let var_h = chunk
            .iter()
            .map(|&(x, xb)| {
                let h = x - investor.lambda_v * xb;
                (h - mean_h) * (h - mean_h)
            })
            .sum::<f64>()
            / (m - 1.0);
        (mean_g, var_h)
    };
    let (mean_term, variance_term) = stats(terminal);
    let value = mean_term - 0.5 * investor.gamma * variance_term;

    let batch_len = n / n_batches;
    let batch_values: Vec<f64> = (0..n_batches)
        .map(|b| {
            let chunk = &terminal[b * batch_len..(b + 1) * batch_len];
            let (g, v) = stats(chunk);
            g - 0.5 * investor.gamma * v
        })
        .collect();
    let bm = batch_values.iter().sum::<f64>() / n_batches as f64;
    let bvar = batch_values.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    Ok(ObjectiveEstimate {
        mean_term,
        variance_term,
        value,
        std_error: (bvar / n_batches as f64).sqrt(),
        n_paths: n,
    })
}

/// A constant offset δ added to one investor's strategy on [t_start, t_end) —
/// the perturbation class of the intra-personal equilibrium test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub delta: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl Perturbation {
    pub fn apply(&self, t: f64, pi: f64) -> f64 {
        if t >= self.t_start && t < self.t_end {
            pi + self.delta
        } else {
            pi
        }
    }
}
