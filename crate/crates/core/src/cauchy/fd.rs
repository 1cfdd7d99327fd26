//! Crank–Nicolson finite-difference solvers for the two Cauchy problems.
//!
//! The equations degenerate at p ∈ {0,1} (the diffusion β² vanishes). The
//! first problem is solved on nested interior domains [1/n, 1−1/n] with
//! zero Dirichlet data; letting n grow recovers the solution from below,
//! mirroring how it is constructed in the first place. The second problem
//! is solved on the full interval, where the degenerate endpoint rows
//! reduce to one-sided transport and need no boundary data. Convection
//! terms switch from central to upwind differencing wherever the cell
//! Péclet number would break monotonicity (the regime-switching drift η
//! reaches ±(q₁+q₂) at the edges, where β² is tiny).

use super::{base_bound, CauchyError, CauchyTable};
use crate::model::MarketParams;

#[derive(Debug, Clone, Copy)]
pub struct FdConfig {
    /// Space intervals across [1/n, 1−1/n].
    pub n_space: usize,
    /// Time steps across [0, T].
    pub n_time: usize,
    /// Domain index n: solve on [1/n, 1−1/n].
    pub domain_n: usize,
}

impl FdConfig {
    fn validate(&self) -> Result<(), CauchyError> {
        if self.n_space < 4 || self.n_time == 0 || self.domain_n < 2 {
            return Err(CauchyError::InvalidConfig(format!(
                "n_space {} (≥4), n_time {} (≥1), domain_n {} (≥2)",
                self.n_space, self.n_time, self.domain_n
            )));
        }
        Ok(())
    }
}

/// Where the space mesh lives and how its edges are treated.
#[derive(Debug, Clone, Copy)]
enum SpaceDomain {
    /// [1/n, 1−1/n] with zero Dirichlet data at both edges.
    Nested(usize),
    /// The full interval [0,1]. The diffusion vanishes at the endpoints and
    /// the convection there points inward (or vanishes), so the endpoint
    /// rows reduce to one-sided transport equations — no boundary data is
    /// imposed or needed.
    Full,
}

/// Solves ∂ₜu + a(p)∂ₚu + ½β(p)²∂ₚₚu + f(t,p) = 0, u(T,·) = 0, marching
/// backwards in time with Crank–Nicolson.
///
/// `bound`, when positive, aborts the march if max |u| exceeds 1.1·bound —
/// a cheap divergence detector, since both problems obey a priori bounds.
fn solve_linear_parabolic(
    market: &MarketParams,
    cfg: &FdConfig,
    domain: SpaceDomain,
    convection: impl Fn(f64) -> f64,
    source: impl Fn(f64, f64) -> f64,
    bound: f64,
) -> Result<CauchyTable, CauchyError> {
    cfg.validate()?;
    let (lo, hi) = match domain {
        SpaceDomain::Nested(n) => {
            let lo = 1.0 / n as f64;
            (lo, 1.0 - lo)
        }
        SpaceDomain::Full => (0.0, 1.0),
    };
    let np = cfg.n_space + 1;
    let h = (hi - lo) / cfg.n_space as f64;
    let p_nodes: Vec<f64> = (0..np).map(|j| lo + j as f64 * h).collect();
    let horizon = market.horizon;
    let dtau = horizon / cfg.n_time as f64;

    // Unknown nodes: interior only (Dirichlet edges) or every node (full).
    let (m, offset) = match domain {
        SpaceDomain::Nested(_) => (np - 2, 1usize),
        SpaceDomain::Full => (np, 0usize),
    };
    // Stencil of L = a∂ₚ + ½β²∂ₚₚ (hybrid central/upwind inside; one-sided
    // pure transport at degenerate endpoints of the full domain).
    let mut lower = vec![0.0f64; m];
    let mut diag = vec![0.0f64; m];
    let mut upper = vec![0.0f64; m];
    for j in 0..m {
        let node = j + offset;
        let p = p_nodes[node];
        let a = convection(p);
        if matches!(domain, SpaceDomain::Full) && node == 0 {
            // β(0) = 0: L u = a·(u₁ − u₀)/h.
            diag[j] = -a / h;
            upper[j] = a / h;
            continue;
        }
        if matches!(domain, SpaceDomain::Full) && node == np - 1 {
            // β(1) = 0: L u = a·(u_{np−1} − u_{np−2})/h.
            diag[j] = a / h;
            lower[j] = -a / h;
            continue;
        }
        let b = market.beta(p);
        let d = 0.5 * b * b / (h * h);
        if a.abs() * h <= b * b || a == 0.0 {
            lower[j] = d - 0.5 * a / h;
            upper[j] = d + 0.5 * a / h;
            diag[j] = -2.0 * d;
        } else {
            let a_plus = a.max(0.0);
            let a_minus = a.min(0.0);
            lower[j] = d - a_minus / h;
            upper[j] = d + a_plus / h;
            diag[j] = -(lower[j] + upper[j]);
        }
    }

    // Crank–Nicolson matrices A = I − (dτ/2)L, B = I + (dτ/2)L.
    let half = 0.5 * dtau;
    let a_lower: Vec<f64> = lower.iter().map(|&x| -half * x).collect();
    let a_diag: Vec<f64> = diag.iter().map(|&x| 1.0 - half * x).collect();
    let a_upper: Vec<f64> = upper.iter().map(|&x| -half * x).collect();

    let mut u = vec![0.0f64; m];
    let mut rhs = vec![0.0f64; m];
    // Row-major [time × space], time ascending; terminal row is zero.
    let mut values = vec![0.0f64; (cfg.n_time + 1) * np];
    let max_allowed = if bound > 0.0 { 1.1 * bound } else { f64::INFINITY };

    for step in 0..cfg.n_time {
        let tau_mid = (step as f64 + 0.5) * dtau;
        let t_mid = horizon - tau_mid;
        for j in 0..m {
            let prev = if j > 0 { u[j - 1] } else { 0.0 };
            let next = if j + 1 < m { u[j + 1] } else { 0.0 };
            rhs[j] = u[j]
                + half * (lower[j] * prev + diag[j] * u[j] + upper[j] * next)
                + dtau * source(t_mid, p_nodes[j + offset]);
        }
        thomas(&a_lower, &a_diag, &a_upper, &rhs, &mut u);
        let max = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !max.is_finite() || max > max_allowed {
            return Err(CauchyError::Instability { max, bound });
        }
        let row = cfg.n_time - 1 - step; // τ grows as t shrinks
        values[row * np + offset..row * np + offset + m].copy_from_slice(&u);
    }

    let t_nodes: Vec<f64> = (0..=cfg.n_time)
        .map(|k| horizon * k as f64 / cfg.n_time as f64)
        .collect();
    CauchyTable::new(t_nodes, p_nodes, values)
}

/// Tridiagonal solve (Thomas algorithm); `lower[0]` and `upper[m−1]` unused.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], out: &mut [f64]) {
    let m = diag.len();
    let mut c_star = vec![0.0f64; m];
    let mut d_star = vec![0.0f64; m];
    c_star[0] = upper[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for j in 1..m {
        let denom = diag[j] - lower[j] * c_star[j - 1];
        c_star[j] = upper[j] / denom;
        d_star[j] = (rhs[j] - lower[j] * d_star[j - 1]) / denom;
    }
    out[m - 1] = d_star[m - 1];
    for j in (0..m - 1).rev() {
        out[j] = d_star[j] - c_star[j] * out[j + 1];
    }
}

/// First problem for the base function b (cᵢ = κᵢ·b): convection
/// η(p) − β(p)(θ(p)−r)/σ, source φ(p)².
pub fn solve_first_fd(market: &MarketParams, cfg: &FdConfig) -> Result<CauchyTable, CauchyError> {
    solve_linear_parabolic(
        market,
        cfg,
        SpaceDomain::Nested(cfg.domain_n),
        |p| market.eta(p) - market.beta(p) * market.risk_price(p),
        |_, p| market.risk_price(p).powi(2),
        base_bound(market, 0.0),
    )
}

/// Second problem for a value offset: convection η(p) only, caller-supplied
/// source R(t,p) and divergence bound.
///
/// Unlike the first problem, this solve covers the full interval [0,1]:
/// the offset does not vanish where the filter degenerates, and η points
/// inward (or vanishes) at the endpoints, so the endpoint rows close the
/// system without artificial boundary data. `cfg.domain_n` is ignored.
pub fn solve_second_fd(
    market: &MarketParams,
    cfg: &FdConfig,
    source: impl Fn(f64, f64) -> f64,
    bound: f64,
) -> Result<CauchyTable, CauchyError> {
    solve_linear_parabolic(market, cfg, SpaceDomain::Full, |p| market.eta(p), source, bound)
}

/// First-problem solves over a sequence of growing domains.
#[derive(Debug, Clone)]
pub struct NestedFdResult {
    pub domains: Vec<usize>,
    pub tables: Vec<CauchyTable>,
}

impl NestedFdResult {
    pub fn finest(&self) -> &CauchyTable {
        self.tables.last().expect("at least one domain")
    }

    /// True if the solves increase monotonically in the domain index at
    /// (t,p), up to `tol` of slack for discretization noise. The interior
    /// solutions are each dominated by the full solution and grow towards
    /// it, so this is a structural self-check.
    pub fn is_monotone_at(&self, t: f64, p: f64, tol: f64) -> bool {
        self.tables
            .windows(2)
            .all(|w| w[1].interp(t, p) >= w[0].interp(t, p) - tol)
    }
}

/// Runs [`solve_first_fd`] on each domain in `domains` (ascending), keeping
/// `cfg.n_space`/`cfg.n_time` fixed.
pub fn solve_first_fd_nested(
    market: &MarketParams,
    cfg: &FdConfig,
    domains: &[usize],
) -> Result<NestedFdResult, CauchyError> {
    if domains.is_empty() || !domains.windows(2).all(|w| w[1] > w[0]) {
        return Err(CauchyError::InvalidConfig(
            "domains must be non-empty and strictly increasing".into(),
        ));
    }
    let mut tables = Vec::with_capacity(domains.len());
    for &n in domains {
        let c = FdConfig { domain_n: n, ..*cfg };
        tables.push(solve_first_fd(market, &c)?);
    }
    Ok(NestedFdResult { domains: domains.to_vec(), tables })
}

#[cfg(test)]
mod tests {
    use super::*;
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

    #[test]
    fn degenerate_first_problem_is_exact() {
        // μ₁ = μ₂ removes convection and diffusion; each node integrates the
        // constant source exactly: b(t,p) = φ²(T−t).
        let m = market(0.15, 0.15, DriftMode::ConstantUnknown { high: true });
        let cfg = FdConfig { n_space: 16, n_time: 50, domain_n: 8 };
        let tab = solve_first_fd(&m, &cfg).unwrap();
        let phi2 = ((0.15 - 0.05) / 0.1_f64).powi(2);
        assert_relative_eq!(tab.interp(0.0, 0.5), phi2 * 10.0, max_relative = 1e-10);
        assert_relative_eq!(tab.interp(4.0, 0.3), phi2 * 6.0, max_relative = 1e-10);
        assert_relative_eq!(tab.interp(10.0, 0.5), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_second_problem_integrates_time_source_exactly() {
        // Source 2(T−t) with no convection/diffusion gives C(t) = (T−t)²;
        // the midpoint rule is exact for a linear-in-t source.
        let m = market(0.05, 0.05, DriftMode::ConstantUnknown { high: true });
        let cfg = FdConfig { n_space: 8, n_time: 40, domain_n: 4 };
        let tab = solve_second_fd(&m, &cfg, |t, _| 2.0 * (m.horizon - t), 100.0).unwrap();
        assert_relative_eq!(tab.interp(0.0, 0.5), 100.0, max_relative = 1e-10);
        assert_relative_eq!(tab.interp(6.0, 0.4), 16.0, max_relative = 1e-10);
    }

    #[test]
    fn nested_solves_grow_towards_solution() {
        let m = market(0.2, 0.02, DriftMode::ConstantUnknown { high: true });
        let cfg = FdConfig { n_space: 128, n_time: 200, domain_n: 0 };
        let nested = solve_first_fd_nested(&m, &cfg, &[4, 8, 16, 32]).unwrap();
        assert!(nested.is_monotone_at(0.0, 0.5, 1e-4));
        assert!(nested.is_monotone_at(5.0, 0.3, 1e-4));
        // the finest solve stays within the a priori bound
        assert!(nested.finest().max_abs() <= base_bound(&m, 0.0) * 1.01);
    }

    #[test]
    fn alternating_convection_is_stable() {
        // η reaches ±20 at the edges while β² → 0: this is exactly where a
        // purely central scheme oscillates. The hybrid stencil must hold.
        let m = market(0.2, 0.02, DriftMode::Alternating { initial_state: 1 });
        let cfg = FdConfig { n_space: 256, n_time: 400, domain_n: 64 };
        let tab = solve_first_fd(&m, &cfg).unwrap();
        assert!(tab.values.iter().all(|v| v.is_finite() && *v >= -1e-9));
        assert!(tab.max_abs() <= base_bound(&m, 0.0) * 1.01);
    }

    #[test]
    fn instability_bound_triggers() {
        let m = market(0.2, 0.02, DriftMode::ConstantUnknown { high: true });
        let cfg = FdConfig { n_space: 16, n_time: 10, domain_n: 8 };
        // an absurdly small bound must trip the detector
        let err = solve_second_fd(&m, &cfg, |_, _| 1.0, 1e-6).unwrap_err();
        assert!(matches!(err, CauchyError::Instability { .. }));
    }

    #[test]
    fn thomas_solves_reference_system() {
        // [2 1 0; 1 2 1; 0 1 2] x = [4; 8; 8] → x = [1; 2; 3]
        let lower = [0.0, 1.0, 1.0];
        let diag = [2.0, 2.0, 2.0];
        let upper = [1.0, 1.0, 0.0];
        let rhs = [4.0, 8.0, 8.0];
        let mut x = [0.0; 3];
        thomas(&lower, &diag, &upper, &rhs, &mut x);
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(x[2], 3.0, max_relative = 1e-12);
    }
}

