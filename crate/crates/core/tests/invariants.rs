//! Property-based invariants: the filter respects its clamp bounds for
//! arbitrary parameters, table interpolation stays inside the corner values,
//! and the closed forms keep their structural properties across the whole
//! parameter space.

use mvgame::cauchy::{base_bound, c_markov, CauchyTable};
use mvgame::engine::{stream, PathBundle, Purpose, TimeGrid};
use mvgame::filtering::{posterior_from_observations, simulate_truth};
use mvgame::model::{
    compute_coefficients, investors_gamma_ramp, DriftMode, MarketParams,
};
use proptest::prelude::*;

fn market(sigma: f64, mu1: f64, mu2: f64, horizon: f64) -> MarketParams {
    MarketParams {
        r: 0.05,
        sigma,
        mu1,
        mu2,
        q1: 10.0,
        q2: 10.0,
        drift_mode: DriftMode::ConstantUnknown { high: true },
        horizon,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_stays_inside_clamp_bounds(
        seed in any::<u64>(),
        p0 in 0.01f64..0.99,
        sigma in 0.05f64..0.5,
        spread in 0.05f64..0.5,
    ) {
        let m = market(sigma, 0.05 + spread, 0.02, 2.0);
        let grid = TimeGrid::new(0.0, m.horizon, 400).unwrap();
        let mut rng = stream(seed, 0, Purpose::Brownian, 0);
        let bundle = PathBundle::generate(grid, &mut rng, (seed, 0));
        let truth = simulate_truth(1.0, &m, &bundle).unwrap();
        let eps = 1e-12;
        let path =
            posterior_from_observations(p0, &m, grid, &truth.log_stock, eps).unwrap();
        prop_assert_eq!(path.values.len(), grid.n_points());
        for &p in &path.values {
            prop_assert!((eps..=1.0 - eps).contains(&p), "posterior {} escaped", p);
        }
        // Clamps can only happen when a value sits exactly on a bound.
        let on_bound = path.values.iter()
            .filter(|&&p| p == eps || p == 1.0 - eps)
            .count();
        prop_assert!(path.clamp_events <= grid.n_steps);
        prop_assert!(on_bound >= path.clamp_events.min(1));
    }

    #[test]
    fn interpolation_is_bounded_by_corner_values(
        values in proptest::collection::vec(-100.0f64..100.0, 12),
        t in 0.0f64..3.0,
        p in 0.0f64..1.0,
    ) {
        let t_nodes = vec![0.0, 1.0, 2.0, 3.0];
        let p_nodes = vec![0.0, 0.4, 1.0];
        let tab = CauchyTable::new(t_nodes, p_nodes, values.clone()).unwrap();
        let v = tab.interp(t, p);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        // Exact at the nodes.
        for (it, &tn) in tab.t_nodes.iter().enumerate() {
            for (ip, &pn) in tab.p_nodes.iter().enumerate() {
                prop_assert!((tab.interp(tn, pn) - tab.at(it, ip)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_scaling_commutes_with_interpolation(
        values in proptest::collection::vec(-10.0f64..10.0, 4),
        k in -5.0f64..5.0,
        t in 0.0f64..1.0,
        p in 0.0f64..1.0,
    ) {
        let tab = CauchyTable::new(vec![0.0, 1.0], vec![0.0, 1.0], values).unwrap();
        let direct = k * tab.interp(t, p);
        let scaled = tab.scaled(k).interp(t, p);
        prop_assert!((direct - scaled).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn coefficients_positive_and_mean_consistent(
        n in 2usize..20,
        gamma0 in 0.1f64..10.0,
        step in 0.0f64..1.0,
        lambda in 0.0f64..0.95,
    ) {
        let investors = investors_gamma_ramp(n, gamma0, step, lambda, lambda);
        let coeff = compute_coefficients(&investors).unwrap();
        prop_assert_eq!(coeff.kappa.len(), n);
        for &k in &coeff.kappa {
            prop_assert!(k > 0.0);
        }
        let mean = coeff.kappa.iter().sum::<f64>() / n as f64;
        prop_assert!((mean - coeff.kappa_bar).abs() < 1e-12 * (1.0 + mean));
        prop_assert!((coeff.lambda_v_bar - lambda).abs() < 1e-12);
    }

    #[test]
    fn regime_value_bounded_and_decreasing_in_time(
        kappa in 0.01f64..2.0,
        t in 0.0f64..9.0,
    ) {
        let m = MarketParams {
            drift_mode: DriftMode::Alternating { initial_state: 1 },
            ..market(0.1, 0.2, 0.02, 10.0)
        };
        for regime in [1u8, 2] {
            let c_now = c_markov(kappa, &m, t, regime);
            let c_later = c_markov(kappa, &m, t + 1.0, regime);
            prop_assert!(c_now >= 0.0);
            prop_assert!(c_now + 1e-12 >= c_later, "remaining value must shrink");
            prop_assert!(c_now <= kappa * base_bound(&m, t) + 1e-12);
        }
    }
}
