//! The two degenerate Cauchy problems behind the partial-information
//! equilibrium, solved by Monte Carlo stochastic representations ([`mc`]),
//! finite differences on nested domains ([`fd`]), and closed forms where
//! they exist ([`closed`]).
//!
//! The first problem determines cᵢ(t,p); since its source is κᵢ·φ(p)² with
//! φ = (θ−r)/σ, every investor's solution is κᵢ times one investor-free
//! "base" function, and the solvers work on that base. The second problem
//! determines the value-function offset Cᵢ(t,p) from the source Rᵢ, which
//! mixes all investors' ∂ₚcᵢ.

pub mod closed;
pub mod fd;
pub mod mc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;
use crate::model::{EquilibriumCoefficients, InvestorParams, MarketParams};

pub use closed::{c_const_full_info, c_markov, value_offset_markov, value_slope_const, value_slope_markov, SignVariant};
pub use fd::{solve_first_fd, solve_first_fd_nested, solve_second_fd, FdConfig, NestedFdResult};
pub use mc::{
    build_base_tables, estimate_base_c, estimate_base_c_stopped, estimate_base_dc,
    estimate_value_offset, BaseTables, McConfig, PointEstimate,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CauchyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("node grid invalid: {0}")]
    InvalidNodes(String),
    #[error("table lookup at (t={t}, p={p}) outside table range")]
    OutOfRange { t: f64, p: f64 },
    #[error("tables are on different node grids")]
    NodeMismatch,
    #[error("finite-difference solve diverged: max |value| {max} exceeds bound {bound}")]
    Instability { max: f64, bound: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// A function of (t, p) tabulated on a rectangular grid, with bilinear
/// interpolation between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyTable {
    /// Ascending time nodes.
    pub t_nodes: Vec<f64>,
    /// Ascending probability nodes.
    pub p_nodes: Vec<f64>,
    /// Row-major values: `values[it * p_nodes.len() + ip]`.
    pub values: Vec<f64>,
}

impl CauchyTable {
    pub fn new(t_nodes: Vec<f64>, p_nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, CauchyError> {
        if t_nodes.len() < 2 || p_nodes.len() < 2 {
            return Err(CauchyError::InvalidNodes("need at least 2 nodes per axis".into()));
        }
        if values.len() != t_nodes.len() * p_nodes.len() {
            return Err(CauchyError::InvalidNodes(format!(
                "{} values for {}×{} grid",
                values.len(),
                t_nodes.len(),
                p_nodes.len()
            )));
        }
        if !t_nodes.windows(2).all(|w| w[1] > w[0]) || !p_nodes.windows(2).all(|w| w[1] > w[0]) {
            return Err(CauchyError::InvalidNodes("nodes must be strictly increasing".into()));
        }
        Ok(CauchyTable { t_nodes, p_nodes, values })
    }

    pub fn at(&self, it: usize, ip: usize) -> f64 {
        self.values[it * self.p_nodes.len() + ip]
    }

    /// Bilinear interpolation; queries outside the node range are clamped to
    /// the boundary (the tables are built to cover the working domain, so
    /// clamping only absorbs floating-point spill at the edges).
    pub fn interp(&self, t: f64, p: f64) -> f64 {
        let (it, wt) = bracket(&self.t_nodes, t);
        let (ip, wp) = bracket(&self.p_nodes, p);
        let np = self.p_nodes.len();
        let v00 = self.values[it * np + ip];
        let v01 = self.values[it * np + ip + 1];
        let v10 = self.values[(it + 1) * np + ip];
        let v11 = self.values[(it + 1) * np + ip + 1];
        (1.0 - wt) * ((1.0 - wp) * v00 + wp * v01) + wt * ((1.0 - wp) * v10 + wp * v11)
    }

    /// A copy with every value multiplied by `k` (e.g. base table → κᵢ table).
    pub fn scaled(&self, k: f64) -> CauchyTable {
        CauchyTable {
            t_nodes: self.t_nodes.clone(),
            p_nodes: self.p_nodes.clone(),
            values: self.values.iter().map(|v| k * v).collect(),
        }
    }

    /// Largest |value| over the whole table.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Index of the left bracketing node and the interpolation weight in [0,1].
fn bracket(nodes: &[f64], x: f64) -> (usize, f64) {
    let n = nodes.len();
    if x <= nodes[0] {
        return (0, 0.0);
    }
    if x >= nodes[n - 1] {
        return (n - 2, 1.0);
    }
    let i = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    };
    let w = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
    (i, w)
}

/// Upper bound on the base function E_Q[∫ₜᵀ φ(P)² du]: (T−t)·max φ².
///
/// Multiplying by κᵢ bounds cᵢ. Used by the finite-difference solvers to
/// detect divergence and by invariant checks.
pub fn base_bound(market: &MarketParams, t: f64) -> f64 {
    let phi2 = market
        .risk_price(0.0)
        .powi(2)
        .max(market.risk_price(1.0).powi(2));
    (market.horizon - t) * phi2
}

/// The source Rᵢ of the second Cauchy problem at one point.
///
/// `dci` is ∂ₚcᵢ(t,p) and `dc_bar` the cross-investor average ∂ₚc̄(t,p).
pub fn r_source(
    market: &MarketParams,
    investor: &InvestorParams,
    coeff: &EquilibriumCoefficients,
    i: usize,
    p: f64,
    dci: f64,
    dc_bar: f64,
) -> f64 {
    let theta_r = market.theta(p) - market.r;
    let sigma = market.sigma;
    let beta = market.beta(p);
    let s2 = sigma * sigma;
    let a_i = coeff.kappa[i] * theta_r / s2 - beta / sigma * dci;
    let a_bar = coeff.kappa_bar * theta_r / s2 - beta / sigma * dc_bar;
    let lv = investor.lambda_v;
    let amp = 1.0 / (1.0 - coeff.lambda_v_bar);
    let linear = theta_r * (a_i + (lv - investor.lambda_m) * amp * a_bar);
    // σ·aᵢ + β·∂ₚcᵢ = κᵢ(θ−r)/σ: the ∂ₚc term in the strategy cancels the
    // filter risk of the hedged wealth combination, whose quadratic variation
    // is therefore κᵢ²φ².
    let hedged_vol = sigma * a_i + beta * dci;
    linear - 0.5 * investor.gamma * hedged_vol * hedged_vol
}

/// Rᵢ when all ∂ₚcᵢ share the base derivative `d` (∂ₚcᵢ = κᵢ·d), which is
/// always the case here; avoids passing per-investor tables around.
pub fn r_source_from_base(
    market: &MarketParams,
    investor: &InvestorParams,
    coeff: &EquilibriumCoefficients,
    i: usize,
    p: f64,
    d: f64,
) -> f64 {
    r_source(
        market,
        investor,
        coeff,
        i,
        p,
        coeff.kappa[i] * d,
        coeff.kappa_bar * d,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_coefficients, DriftMode};
    use approx::assert_relative_eq;

    #[test]
    fn table_interp_reproduces_bilinear_function() {
        let t_nodes = vec![0.0, 1.0, 2.0];
        let p_nodes = vec![0.0, 0.5, 1.0];
        let f = |t: f64, p: f64| 2.0 * t + 3.0 * p + t * p;
        let mut values = Vec::new();
        for &t in &t_nodes {
            for &p in &p_nodes {
                values.push(f(t, p));
            }
        }
        let tab = CauchyTable::new(t_nodes, p_nodes, values).unwrap();
        assert_relative_eq!(tab.interp(0.3, 0.2), f(0.3, 0.2), max_relative = 1e-14);
        assert_relative_eq!(tab.interp(1.7, 0.9), f(1.7, 0.9), max_relative = 1e-14);
        // clamped outside
        assert_relative_eq!(tab.interp(-1.0, 0.5), f(0.0, 0.5), max_relative = 1e-14);
        assert_relative_eq!(tab.interp(5.0, 1.5), f(2.0, 1.0), max_relative = 1e-14);
    }

    #[test]
    fn table_rejects_bad_shapes() {
        assert!(CauchyTable::new(vec![0.0], vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(CauchyTable::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0; 3]).is_err());
        assert!(CauchyTable::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0; 4]).is_err());
    }

    fn market() -> MarketParams {
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
    fn r_source_reduces_to_value_slope_at_endpoints() {
        // At p ∈ {0,1}, β = 0 and ∂c plays no role, so Rᵢ equals the
        // full-information per-time value slope with μ = θ(p).
        let m = market();
        let investors = crate::model::investors_gamma_ramp(10, 8.0, 0.1, 0.5, 0.5);
        let coeff = compute_coefficients(&investors).unwrap();
        for p in [0.0, 1.0] {
            for (i, inv) in investors.iter().enumerate() {
                let r = r_source_from_base(&m, inv, &coeff, i, p, 0.37);
                let h = ((m.theta(p) - m.r) / m.sigma).powi(2);
                let slope =
                    closed::value_slope(h, inv, &coeff, i, closed::SignVariant::Plus);
                assert_relative_eq!(r, slope, max_relative = 1e-12, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn base_bound_decreases_in_time() {
        let m = market();
        assert!(base_bound(&m, 0.0) > base_bound(&m, 5.0));
        assert_relative_eq!(base_bound(&m, m.horizon), 0.0);
        // max φ² over [0,1] is attained at an endpoint since θ is affine
        assert_relative_eq!(base_bound(&m, 0.0), 10.0 * ((0.2 - 0.05) / 0.1_f64).powi(2));
    }
}
