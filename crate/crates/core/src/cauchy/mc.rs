//! Monte Carlo estimators built on the stochastic representations of the two
//! Cauchy problems.
//!
//! The base function b(t,p) (with cᵢ = κᵢ·b) and its p-derivative are
//! estimated under the measure ℚ; the value offset Cᵢ is estimated under the
//! physical measure. Because the coefficients are time-homogeneous,
//! b(t,p) = b̂(T−t, p), so one batch of full-horizon paths per p-node yields
//! the whole time axis through running partial integrals.

use rand::Rng;
use rayon::prelude::*;

use super::{r_source_from_base, CauchyError, CauchyTable};
use crate::engine::{
    simulate_posterior, simulate_tangent, stream, PathBundle, Purpose, TimeGrid,
};
use crate::filtering::Measure;
use crate::model::{EquilibriumCoefficients, InvestorParams, MarketParams};

#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_paths: usize,
    /// Euler steps over the full horizon [t, T].
    pub n_steps: usize,
    pub seed: u64,
    pub clamp_eps: f64,
}

impl McConfig {
    fn validate(&self) -> Result<(), CauchyError> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(CauchyError::InvalidConfig(
                "n_paths and n_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

fn summarize(samples: &[f64]) -> PointEstimate {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    PointEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n_paths: n,
    }
}

/// b(t,p) = E_ℚ[∫ₜᵀ φ(P(u))² du] by left-Riemann integration along Euler
/// paths of the ℚ-filter.
pub fn estimate_base_c(
    market: &MarketParams,
    t: f64,
    p: f64,
    cfg: &McConfig,
) -> Result<PointEstimate, CauchyError> {
    cfg.validate()?;
    let grid = TimeGrid::new(t, market.horizon, cfg.n_steps)?;
    let dt = grid.dt();
    let samples: Result<Vec<f64>, CauchyError> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|lane| {
            let mut rng = stream(cfg.seed, lane as u64, Purpose::Estimator, 0);
            let bundle = PathBundle::generate(grid, &mut rng, (cfg.seed, lane as u64));
            let path = simulate_posterior(p, market, &bundle, Measure::Q, cfg.clamp_eps)?;
            Ok(path.values[..grid.n_steps]
                .iter()
                .map(|&pu| market.risk_price(pu).powi(2) * dt)
                .sum())
        })
        .collect();
    Ok(summarize(&samples?))
}

/// ∂ₚb(t,p) = (2/σ²)(μ₁−μ₂)·E_ℚ[∫ₜᵀ ζ(u)(θ(P(u))−r) du] via the tangent
/// process ζ of the ℚ-filter.
pub fn estimate_base_dc(
    market: &MarketParams,
    t: f64,
    p: f64,
    cfg: &McConfig,
) -> Result<PointEstimate, CauchyError> {
    cfg.validate()?;
    let grid = TimeGrid::new(t, market.horizon, cfg.n_steps)?;
    let dt = grid.dt();
    let scale = 2.0 / (market.sigma * market.sigma) * (market.mu1 - market.mu2);
    let samples: Result<Vec<f64>, CauchyError> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|lane| {
            let mut rng = stream(cfg.seed, lane as u64, Purpose::Estimator, 0);
            let bundle = PathBundle::generate(grid, &mut rng, (cfg.seed, lane as u64));
            let path = simulate_posterior(p, market, &bundle, Measure::Q, cfg.clamp_eps)?;
            let zeta = simulate_tangent(&path, market)?;
            let integral: f64 = (0..grid.n_steps)
                .map(|k| zeta.values[k] * (market.theta(path.values[k]) - market.r) * dt)
                .sum();
            Ok(scale * integral)
        })
        .collect();
    Ok(summarize(&samples?))
}

/// The stopped variant of [`estimate_base_c`]: integration halts when the
/// filter first leaves (1/n, 1−1/n).
///
/// This is the exact object the nested-domain finite-difference solve with
/// zero lateral data computes, which makes the two mutually checkable at
/// finite n; the unstopped base function is its monotone limit as n → ∞.
pub fn estimate_base_c_stopped(
    market: &MarketParams,
    t: f64,
    p: f64,
    domain_n: usize,
    cfg: &McConfig,
) -> Result<PointEstimate, CauchyError> {
    cfg.validate()?;
    let lo = 1.0 / domain_n as f64;
    let hi = 1.0 - lo;
    if p <= lo || p >= hi {
        return Ok(PointEstimate { mean: 0.0, std_error: 0.0, n_paths: cfg.n_paths });
    }
    let grid = TimeGrid::new(t, market.horizon, cfg.n_steps)?;
    let dt = grid.dt();
    let samples: Result<Vec<f64>, CauchyError> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|lane| {
            let mut rng = stream(cfg.seed, lane as u64, Purpose::Estimator, 0);
            let bundle = PathBundle::generate(grid, &mut rng, (cfg.seed, lane as u64));
            let path = simulate_posterior(p, market, &bundle, Measure::Q, cfg.clamp_eps)?;
            let mut integral = 0.0;
            for k in 0..grid.n_steps {
                let x0 = path.values[k];
                if x0 <= lo || x0 >= hi {
                    break;
                }
                integral += market.risk_price(x0).powi(2) * dt;
                let x1 = path.values[k + 1];
                if x1 <= lo || x1 >= hi {
                    break;
                }
                // Brownian-bridge exit test: discrete monitoring alone would
                // miss excursions through a barrier between grid points and
                // bias the stopped integral high by O(√dt).
                let var = market.beta(0.5 * (x0 + x1)).powi(2) * dt;
                if var > 0.0 {
                    let cross_hi = (-2.0 * (hi - x0) * (hi - x1) / var).exp();
                    let cross_lo = (-2.0 * (x0 - lo) * (x1 - lo) / var).exp();
                    if rng.gen::<f64>() < cross_hi + cross_lo {
                        break;
                    }
                }
            }
            Ok(integral)
        })
        .collect();
    Ok(summarize(&samples?))
}

/// The Monte-Carlo tables of the first Cauchy problem's base function,
/// with per-node standard errors.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BaseTables {
    /// b(t,p); cᵢ = κᵢ·b.
    pub c: CauchyTable,
    /// ∂ₚb(t,p); ∂ₚcᵢ = κᵢ·∂ₚb.
    pub dc: CauchyTable,
    pub se_c: CauchyTable,
    pub se_dc: CauchyTable,
}

/// Builds tables of b and ∂ₚb on `t_nodes × p_nodes` in one sweep.
///
/// Per p-node, each full-horizon path is integrated once and its running
/// partial integrals are read off at the offsets T−tⱼ, which is valid
/// because the filter SDE is time-homogeneous. Node batches use disjoint
/// seed lanes, so the result is independent of thread scheduling.
pub fn build_base_tables(
    market: &MarketParams,
    t_nodes: &[f64],
    p_nodes: &[f64],
    cfg: &McConfig,
) -> Result<BaseTables, CauchyError> {
    cfg.validate()?;
    let horizon = market.horizon;
    for &t in t_nodes {
        if !(0.0..=horizon).contains(&t) {
            return Err(CauchyError::InvalidNodes(format!("t node {t} outside [0, {horizon}]")));
        }
    }
    let grid = TimeGrid::new(0.0, horizon, cfg.n_steps)?;
    let dt = grid.dt();
    // Step count covering the remaining horizon for each t node.
    let offsets: Vec<usize> = t_nodes
        .iter()
        .map(|&t| (((horizon - t) / dt).round() as usize).min(grid.n_steps))
        .collect();
    let scale_dc = 2.0 / (market.sigma * market.sigma) * (market.mu1 - market.mu2);

    struct NodeColumns {
        mean_c: Vec<f64>,
        mean_d: Vec<f64>,
        se_c: Vec<f64>,
        se_d: Vec<f64>,
    }

    // Per p-node: mean partial integrals of φ² and of ζ(θ−r) at each offset.
    let per_node: Result<Vec<NodeColumns>, CauchyError> = p_nodes
        .par_iter()
        .enumerate()
        .map(|(node, &p)| {
            let nt = t_nodes.len();
            let mut sum_c = vec![0.0f64; nt];
            let mut sum_d = vec![0.0f64; nt];
            let mut sq_c = vec![0.0f64; nt];
            let mut sq_d = vec![0.0f64; nt];
            let mut run_c = vec![0.0f64; grid.n_steps + 1];
            let mut run_d = vec![0.0f64; grid.n_steps + 1];
            for path_idx in 0..cfg.n_paths {
                let mut rng = stream(cfg.seed, path_idx as u64, Purpose::Estimator, node as u64);
                let bundle = PathBundle::generate(grid, &mut rng, (cfg.seed, path_idx as u64));
                let path = simulate_posterior(p, market, &bundle, Measure::Q, cfg.clamp_eps)?;
                let zeta = simulate_tangent(&path, market)?;
                for k in 0..grid.n_steps {
                    let pu = path.values[k];
                    run_c[k + 1] = run_c[k] + market.risk_price(pu).powi(2) * dt;
                    run_d[k + 1] = run_d[k] + zeta.values[k] * (market.theta(pu) - market.r) * dt;
                }
                for (j, &steps) in offsets.iter().enumerate() {
                    sum_c[j] += run_c[steps];
                    sq_c[j] += run_c[steps] * run_c[steps];
                    sum_d[j] += run_d[steps];
                    sq_d[j] += run_d[steps] * run_d[steps];
                }
            }
            let n = cfg.n_paths as f64;
            let mut cols = NodeColumns {
                mean_c: vec![0.0; nt],
                mean_d: vec![0.0; nt],
                se_c: vec![0.0; nt],
                se_d: vec![0.0; nt],
            };
            for j in 0..nt {
                let mc = sum_c[j] / n;
                let md = sum_d[j] / n;
                let var_c = ((sq_c[j] / n - mc * mc) * n / (n - 1.0).max(1.0)).max(0.0);
                let var_d = ((sq_d[j] / n - md * md) * n / (n - 1.0).max(1.0)).max(0.0);
                cols.mean_c[j] = mc;
                cols.mean_d[j] = scale_dc * md;
                cols.se_c[j] = (var_c / n).sqrt();
                cols.se_d[j] = scale_dc.abs() * (var_d / n).sqrt();
            }
            Ok(cols)
        })
        .collect();
    let per_node = per_node?;

    let nt = t_nodes.len();
    let np = p_nodes.len();
    let mut values = [vec![0.0f64; nt * np], vec![0.0; nt * np], vec![0.0; nt * np], vec![0.0; nt * np]];
    for (ip, cols) in per_node.iter().enumerate() {
        for it in 0..nt {
            values[0][it * np + ip] = cols.mean_c[it];
            values[1][it * np + ip] = cols.mean_d[it];
            values[2][it * np + ip] = cols.se_c[it];
            values[3][it * np + ip] = cols.se_d[it];
        }
    }
    let [vc, vd, vsc, vsd] = values;
    Ok(BaseTables {
        c: CauchyTable::new(t_nodes.to_vec(), p_nodes.to_vec(), vc)?,
        dc: CauchyTable::new(t_nodes.to_vec(), p_nodes.to_vec(), vd)?,
        se_c: CauchyTable::new(t_nodes.to_vec(), p_nodes.to_vec(), vsc)?,
        se_dc: CauchyTable::new(t_nodes.to_vec(), p_nodes.to_vec(), vsd)?,
    })
}

/// Cᵢ(t,p) = E[∫ₜᵀ Rᵢ(u, P(u)) du] under the physical measure, with the
/// ∂ₚc values entering Rᵢ interpolated from a base-derivative table.
pub fn estimate_value_offset(
    market: &MarketParams,
    investors: &[InvestorParams],
    coeff: &EquilibriumCoefficients,
    i: usize,
    dc_base: &CauchyTable,
    t: f64,
    p: f64,
    cfg: &McConfig,
) -> Result<PointEstimate, CauchyError> {
    cfg.validate()?;
    let grid = TimeGrid::new(t, market.horizon, cfg.n_steps)?;
    let dt = grid.dt();
    let inv = &investors[i];
    let samples: Result<Vec<f64>, CauchyError> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|lane| {
            let mut rng = stream(cfg.seed, lane as u64, Purpose::Estimator, 1);
            let bundle = PathBundle::generate(grid, &mut rng, (cfg.seed, lane as u64));
            let path = simulate_posterior(p, market, &bundle, Measure::P, cfg.clamp_eps)?;
            let mut integral = 0.0;
            for k in 0..grid.n_steps {
                let u = grid.time(k);
                let pu = path.values[k];
                let d = dc_base.interp(u, pu);
                integral += r_source_from_base(market, inv, coeff, i, pu, d) * dt;
            }
            Ok(integral)
        })
        .collect();
    Ok(summarize(&samples?))
}
