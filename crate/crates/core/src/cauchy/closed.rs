//! Closed-form solutions available under full information: constant expected
//! return, and the observable two-state regime chain.

use serde::{Deserialize, Serialize};

use crate::model::{EquilibriumCoefficients, InvestorParams, MarketParams};

/// Sign of the (λⱽᵢ−λᴹᵢ)/(1−λ̄ⱽ)·κ̄ term in the per-time value slope.
///
/// The constant-return slope and the source of the second Cauchy problem
/// both carry `Plus`; the regime-chain display carries `Minus`. The two
/// coincide whenever λⱽ = λᴹ (as in the reference scenarios). `Plus` is the
/// default; `Minus` is kept selectable for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignVariant {
    #[default]
    Plus,
    Minus,
}

/// Per-time slope of the value offset given squared Sharpe ratio `h`:
///
/// h·{ κᵢ ± ((λⱽᵢ−λᴹᵢ)/(1−λ̄ⱽ))κ̄ − (γᵢ/2)κᵢ² }.
///
/// The mean weight κᵢ + cross is e^{r(T−t)}(πᵢ* − λᴹᵢπ̄*)·σ²/(μ−r); the
/// variance weight collapses to κᵢ because the per-capita aggregate is
/// κ̄/(1−λ̄ⱽ), so e^{r(T−t)}(πᵢ* − λⱽᵢπ̄*) = κᵢ(μ−r)/σ² exactly. The
/// simulated objective under the equilibrium confirms this form.
pub fn value_slope(
    h: f64,
    investor: &InvestorParams,
    coeff: &EquilibriumCoefficients,
    i: usize,
    variant: SignVariant,
) -> f64 {
    let lv = investor.lambda_v;
    let amp = 1.0 / (1.0 - coeff.lambda_v_bar);
    let cross = (lv - investor.lambda_m) * amp * coeff.kappa_bar;
    let signed_cross = match variant {
        SignVariant::Plus => cross,
        SignVariant::Minus => -cross,
    };
    let hedge = coeff.kappa[i];
    h * (coeff.kappa[i] + signed_cross - 0.5 * investor.gamma * hedge * hedge)
}

/// Squared Sharpe ratio ((μ−r)/σ)².
pub fn squared_sharpe(market: &MarketParams, mu: f64) -> f64 {
    ((mu - market.r) / market.sigma).powi(2)
}

/// Value slope under a known constant expected return μ.
pub fn value_slope_const(
    market: &MarketParams,
    mu: f64,
    investor: &InvestorParams,
    coeff: &EquilibriumCoefficients,
    i: usize,
    variant: SignVariant,
) -> f64 {
    value_slope(squared_sharpe(market, mu), investor, coeff, i, variant)
}

/// Value slope attached to regime `m` of the observable chain.
pub fn value_slope_markov(
    market: &MarketParams,
    m: u8,
    investor: &InvestorParams,
    coeff: &EquilibriumCoefficients,
    i: usize,
    variant: SignVariant,
) -> f64 {
    value_slope(
        squared_sharpe(market, market.mu_of_state(m)),
        investor,
        coeff,
        i,
        variant,
    )
}

/// cᵢ(t) = κᵢ((μ−r)/σ)²(T−t) under a known constant μ.
pub fn c_const_full_info(kappa_i: f64, market: &MarketParams, mu: f64, t: f64) -> f64 {
    kappa_i * squared_sharpe(market, mu) * (market.horizon - t)
}

/// ∫₀^Δ of the conditional regime weight: returns (mean-rate part, transient
/// part) so the caller can combine them with any per-regime payoffs.
///
/// For a payoff gₘ per unit time while in regime m, starting from regime m₀:
///   E[∫ₜᵀ g_{M(u)} du] = (q₂g₁+q₁g₂)/qΣ·Δ ± (q_{m₀}/qΣ²)(g₁−g₂)(1−e^{−qΣΔ}),
/// with `+q₁` from regime 1 and `−q₂` from regime 2 and qΣ = q₁+q₂.
fn chain_integral(q1: f64, q2: f64, delta: f64, g1: f64, g2: f64, from: u8) -> f64 {
    let qs = q1 + q2;
    let mean = (q2 * g1 + q1 * g2) / qs * delta;
    let transient = (g1 - g2) / (qs * qs) * (1.0 - (-qs * delta).exp());
    match from {
        1 => mean + q1 * transient,
        _ => mean - q2 * transient,
    }
}

/// cᵢ(t,m) = κᵢ E[∫ₜᵀ ((μ(M(u))−r)/σ)² du | M(t)=m] in closed form.
pub fn c_markov(kappa_i: f64, market: &MarketParams, t: f64, m: u8) -> f64 {
    let h1 = squared_sharpe(market, market.mu1);
    let h2 = squared_sharpe(market, market.mu2);
    kappa_i * chain_integral(market.q1, market.q2, market.horizon - t, h1, h2, m)
}

/// Cᵢ(t,m): the regime-chain value offset, combining the per-regime slopes
/// through the same conditional-occupation integral as [`c_markov`].
pub fn value_offset_markov(
    market: &MarketParams,
    investor: &InvestorParams,
    coeff: &EquilibriumCoefficients,
    i: usize,
    t: f64,
    m: u8,
    variant: SignVariant,
) -> f64 {
    let g1 = value_slope_markov(market, 1, investor, coeff, i, variant);
    let g2 = value_slope_markov(market, 2, investor, coeff, i, variant);
    chain_integral(market.q1, market.q2, market.horizon - t, g1, g2, m)
}
