//! Market and investor parameters, derived equilibrium constants, and the
//! scalar model functions θ, β, η.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: &'static str, message: String },
    #[error("probability {0} outside [0,1]")]
    ProbabilityOutOfRange(f64),
    #[error("empty investor list")]
    NoInvestors,
    #[error("average variance weight {0} must be < 1")]
    VarianceWeightMeanTooLarge(f64),
}

fn check(cond: bool, field: &'static str, message: impl Into<String>) -> Result<(), ModelError> {
    if cond {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            message: message.into(),
        })
    }
}

/// How the expected return of the stock behaves behind the scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftMode {
    /// μ is a fixed constant, unknown to investors; `high` tells whether the
    /// true value is μ₁ (`true`) or μ₂ (`false`).
    ConstantUnknown { high: bool },
    /// μ alternates with a two-state chain; `initial_state` ∈ {1, 2}.
    Alternating { initial_state: u8 },
}

impl DriftMode {
    pub fn is_alternating(&self) -> bool {
        matches!(self, DriftMode::Alternating { .. })
    }
}

/// Market constants shared by all investors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Riskfree rate r.
    pub r: f64,
    /// Volatility σ > 0.
    pub sigma: f64,
    /// High expected return μ₁.
    pub mu1: f64,
    /// Low expected return μ₂ ≤ μ₁.
    pub mu2: f64,
    /// Transition rate out of state 1 (used in alternating mode).
    pub q1: f64,
    /// Transition rate out of state 2 (used in alternating mode).
    pub q2: f64,
    pub drift_mode: DriftMode,
    /// Horizon T > 0.
    pub horizon: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check(self.sigma > 0.0, "sigma", "must be > 0")?;
        check(self.horizon > 0.0, "horizon", "must be > 0")?;
        check(
            self.mu1 >= self.mu2,
            "mu1",
            format!("mu1 ({}) must be >= mu2 ({})", self.mu1, self.mu2),
        )?;
        check(self.sigma.is_finite() && self.r.is_finite(), "r", "must be finite")?;
        if let DriftMode::Alternating { initial_state } = self.drift_mode {
            check(self.q1 > 0.0, "q1", "must be > 0 in alternating mode")?;
            check(self.q2 > 0.0, "q2", "must be > 0 in alternating mode")?;
            check(
                initial_state == 1 || initial_state == 2,
                "drift_mode.initial_state",
                "must be 1 or 2",
            )?;
        }
        Ok(())
    }

    /// The true expected return in `ConstantUnknown` mode, or the return
    /// attached to chain state `m` in alternating mode.
    pub fn mu_of_state(&self, m: u8) -> f64 {
        if m == 1 {
            self.mu1
        } else {
            self.mu2
        }
    }

    /// θ(p) = (μ₁−μ₂)p + μ₂, the filtered expected return.
    pub fn theta(&self, p: f64) -> f64 {
        (self.mu1 - self.mu2) * p + self.mu2
    }

    /// β(p) = ((μ₁−μ₂)/σ)·p(1−p), the filter diffusion coefficient.
    pub fn beta(&self, p: f64) -> f64 {
        (self.mu1 - self.mu2) / self.sigma * p * (1.0 - p)
    }

    /// β′(p).
    pub fn beta_prime(&self, p: f64) -> f64 {
        (self.mu1 - self.mu2) / self.sigma * (1.0 - 2.0 * p)
    }

    /// Filter drift under the physical measure: η(p) = −(q₁+q₂)p + q₂ in
    /// alternating mode, identically 0 otherwise.
    pub fn eta(&self, p: f64) -> f64 {
        match self.drift_mode {
            DriftMode::Alternating { .. } => -(self.q1 + self.q2) * p + self.q2,
            DriftMode::ConstantUnknown { .. } => 0.0,
        }
    }

    pub fn eta_prime(&self) -> f64 {
        match self.drift_mode {
            DriftMode::Alternating { .. } => -(self.q1 + self.q2),
            DriftMode::ConstantUnknown { .. } => 0.0,
        }
    }

    /// Market price of risk at posterior p: (θ(p)−r)/σ.
    pub fn risk_price(&self, p: f64) -> f64 {
        (self.theta(p) - self.r) / self.sigma
    }

    /// θ, β, η evaluated together; rejects p outside [0,1].
    pub fn model_functions(&self, p: f64) -> Result<(f64, f64, f64), ModelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::ProbabilityOutOfRange(p));
        }
        Ok((self.theta(p), self.beta(p), self.eta(p)))
    }
}

/// Per-investor preference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvestorParams {
    /// Risk aversion γ > 0.
    pub gamma: f64,
    /// Mean-weight λᴹ ∈ (0,1).
    pub lambda_m: f64,
    /// Variance-weight λⱽ ∈ [0,1); 0 admits the decoupled special case.
    pub lambda_v: f64,
}

impl InvestorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check(self.gamma > 0.0, "gamma", "must be > 0")?;
        check(
            self.lambda_m > 0.0 && self.lambda_m < 1.0,
            "lambda_m",
            "must be in (0,1)",
        )?;
        check(
            (0.0..1.0).contains(&self.lambda_v),
            "lambda_v",
            "must be in [0,1)",
        )?;
        Ok(())
    }
}

/// Constants κᵢ, κ̄, λ̄ⱽ entering every equilibrium formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCoefficients {
    pub kappa: Vec<f64>,
    pub kappa_bar: f64,
    pub lambda_v_bar: f64,
    pub n: usize,
}

impl EquilibriumCoefficients {
    /// λᵢⱽ/(1−λ̄ⱽ), the relative-performance amplification factor for
    /// investor `i`.
    pub fn amplification(&self, investor: &InvestorParams) -> f64 {
        investor.lambda_v / (1.0 - self.lambda_v_bar)
    }
}

/// κᵢ = (1/γᵢ)(1−λᵢⱽ/N)⁻¹(1−λᵢᴹ/N), plus the averages κ̄ and λ̄ⱽ.
pub fn compute_coefficients(
    investors: &[InvestorParams],
) -> Result<EquilibriumCoefficients, ModelError> {
    if investors.is_empty() {
        return Err(ModelError::NoInvestors);
    }
    for inv in investors {
        inv.validate()?;
    }
    let n = investors.len();
    let nf = n as f64;
    let kappa: Vec<f64> = investors
        .iter()
        .map(|inv| 1.0 / inv.gamma / (1.0 - inv.lambda_v / nf) * (1.0 - inv.lambda_m / nf))
        .collect();
    let kappa_bar = kappa.iter().sum::<f64>() / nf;
    let lambda_v_bar = investors.iter().map(|i| i.lambda_v).sum::<f64>() / nf;
    if lambda_v_bar >= 1.0 {
        return Err(ModelError::VarianceWeightMeanTooLarge(lambda_v_bar));
    }
    Ok(EquilibriumCoefficients {
        kappa,
        kappa_bar,
        lambda_v_bar,
        n,
    })
}

/// The ten-investor parameter set behind the constant-μ experiments:
/// λᴹ=λⱽ=0.5, γᵢ = 8 + 0.1i.
pub fn investors_gamma_ramp(n: usize, gamma0: f64, gamma_step: f64, lambda_m: f64, lambda_v: f64) -> Vec<InvestorParams> {
    (1..=n)
        .map(|i| InvestorParams {
            gamma: gamma0 + gamma_step * i as f64,
            lambda_m,
            lambda_v,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn kappa_cancellation_when_weights_equal() {
        // λᴹ = λⱽ makes the two (1 − λ/N) factors cancel, so κᵢ = 1/γᵢ.
        let investors = investors_gamma_ramp(10, 8.0, 0.1, 0.5, 0.5);
        let coeff = compute_coefficients(&investors).unwrap();
        for (k, inv) in coeff.kappa.iter().zip(&investors) {
            assert_relative_eq!(*k, 1.0 / inv.gamma, max_relative = 1e-14);
        }
        assert_relative_eq!(coeff.kappa[0], 0.123457, max_relative = 1e-5);
        // κ̄ over γ = 8.1..9.0.
        let expected_bar: f64 = (1..=10).map(|i| 1.0 / (8.0 + 0.1 * i as f64)).sum::<f64>() / 10.0;
        assert_relative_eq!(coeff.kappa_bar, expected_bar, max_relative = 1e-14);
        assert_relative_eq!(coeff.kappa_bar, 0.117091, max_relative = 1e-5);
    }

    #[test]
    fn single_investor_coefficients() {
        let inv = InvestorParams { gamma: 2.0, lambda_m: 0.5, lambda_v: 0.5 };
        let coeff = compute_coefficients(&[inv]).unwrap();
        assert_relative_eq!(coeff.kappa[0], 0.5);
        assert_relative_eq!(coeff.kappa_bar, 0.5);
        assert_relative_eq!(coeff.lambda_v_bar, 0.5);
    }

    #[test]
    fn coefficients_reject_bad_input() {
        assert_eq!(compute_coefficients(&[]), Err(ModelError::NoInvestors));
        let bad = InvestorParams { gamma: -1.0, lambda_m: 0.5, lambda_v: 0.5 };
        assert!(compute_coefficients(&[bad]).is_err());
    }

    #[test]
    fn kappa_positive_for_valid_investors() {
        let investors = investors_gamma_ramp(10, 0.0, 0.1, 0.9, 0.9);
        let coeff = compute_coefficients(&investors).unwrap();
        assert!(coeff.kappa.iter().all(|k| *k > 0.0));
    }

    #[test]
    fn model_functions_endpoints_and_midpoint() {
        let m = figure1_market();
        let (theta0, beta0, eta0) = m.model_functions(0.0).unwrap();
        assert_relative_eq!(theta0, m.mu2);
        assert_relative_eq!(beta0, 0.0);
        assert_relative_eq!(eta0, 0.0); // constant mode
        let (theta1, beta1, _) = m.model_functions(1.0).unwrap();
        assert_relative_eq!(theta1, m.mu1);
        assert_relative_eq!(beta1, 0.0);
        let (theta, beta, _) = m.model_functions(0.5).unwrap();
        assert_relative_eq!(theta, 0.11, max_relative = 1e-14);
        assert_relative_eq!(beta, 0.45, max_relative = 1e-14);
    }

    #[test]
    fn eta_in_alternating_mode() {
        let mut m = figure1_market();
        m.drift_mode = DriftMode::Alternating { initial_state: 1 };
        let (_, _, eta0) = m.model_functions(0.0).unwrap();
        assert_relative_eq!(eta0, m.q2);
        let (_, _, eta1) = m.model_functions(1.0).unwrap();
        assert_relative_eq!(eta1, -m.q1);
        // mean-reversion fixed point q₂/(q₁+q₂) = 0.5 for q₁=q₂
        let (_, _, eta_mid) = m.model_functions(0.5).unwrap();
        assert_relative_eq!(eta_mid, 0.0);
    }

    #[test]
    fn model_functions_reject_out_of_range() {
        let m = figure1_market();
        assert!(m.model_functions(-0.01).is_err());
        assert!(m.model_functions(1.01).is_err());
    }

    #[test]
    fn beta_shape() {
        let m = figure1_market();
        let mut max_val = f64::MIN;
        let mut max_p = 0.0;
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            let b = m.beta(p);
            assert!(b >= 0.0);
            if b > max_val {
                max_val = b;
                max_p = p;
            }
            let th = m.theta(p);
            assert!(th >= m.mu2 - 1e-15 && th <= m.mu1 + 1e-15);
        }
        assert_relative_eq!(max_p, 0.5);
    }

    #[test]
    fn degenerate_equal_drifts_allowed() {
        let mut m = figure1_market();
        m.mu2 = m.mu1;
        m.validate().unwrap();
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            assert_eq!(m.beta(p), 0.0);
            assert_eq!(m.theta(p), m.mu1);
        }
    }
}
