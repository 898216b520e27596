//! Mechanics of the Monte Carlo oracle: bit-reproducibility, the stream
//! layout across workers, the deterministic truncation inequality, and the
//! discounted-price martingale identity that the simulated chain satisfies
//! exactly at any step size.

use drawdown_put::{
    estimate_price, simulate_path, ContractState, McConfig, ModelParams, PriceModel, StopKind,
};

fn figure_params() -> ModelParams {
    ModelParams::new(0.1, 0.2, 0.2, 3.0).unwrap()
}

fn figure_state(s: f64, smax: f64) -> ContractState {
    ContractState::new(100.0, 1.2f64.ln(), s.ln(), smax.ln()).unwrap()
}

#[test]
fn estimates_are_bit_reproducible() {
    let params = figure_params();
    let contract = figure_state(95.0, 96.0);
    let cfg = McConfig { n_paths: 5_000, dt: 0.01, t_max: 50.0, seed: 42, n_workers: 3 };
    let a = 4.41;
    let first = estimate_price(&params, &contract, a, &cfg);
    let second = estimate_price(&params, &contract, a, &cfg);
    assert_eq!(first.mean.to_bits(), second.mean.to_bits());
    assert_eq!(first.std_err.to_bits(), second.std_err.to_bits());
    assert_eq!(first.truncation_bound.to_bits(), second.truncation_bound.to_bits());

    let one = simulate_path(&params, &contract, a, &cfg, 17);
    let two = simulate_path(&params, &contract, a, &cfg, 17);
    assert_eq!(one.stop_time.to_bits(), two.stop_time.to_bits());
    assert_eq!(one.x_at_stop.to_bits(), two.x_at_stop.to_bits());
    assert_eq!(one.stop_kind, two.stop_kind);
}

#[test]
fn worker_count_changes_only_the_stream_layout() {
    let params = figure_params();
    let contract = figure_state(95.0, 96.0);
    let model = PriceModel::new(&params, 100.0, 1.2f64.ln()).unwrap();
    let base = McConfig { n_paths: 20_000, dt: 0.01, t_max: 100.0, seed: 42, n_workers: 1 };
    let split = McConfig { n_workers: 4, ..base };
    let serial = estimate_price(&params, &contract, model.a_star(), &base);
    let parallel = estimate_price(&params, &contract, model.a_star(), &split);
    let combined = (serial.std_err.powi(2) + parallel.std_err.powi(2)).sqrt();
    assert!(
        (serial.mean - parallel.mean).abs() <= 3.0 * combined,
        "estimates {} and {} differ beyond the stream reshuffle noise {combined}",
        serial.mean,
        parallel.mean
    );

    let tiny = McConfig { n_paths: 3, n_workers: 8, ..base };
    let estimate = estimate_price(&params, &contract, model.a_star(), &tiny);
    assert!(estimate.mean.is_finite());
}

/// Cutting the horizon removes exactly the payoffs of paths still alive at the
/// cut, each of which is bounded by the strike discounted to the cut; the
/// truncation bound therefore brackets the shortfall deterministically, not
/// just in law. Paths get one stream each so the two horizons see identical
/// randomness.
#[test]
fn truncation_bound_brackets_the_horizon_cut() {
    let params = figure_params();
    let contract = figure_state(95.0, 96.0);
    let model = PriceModel::new(&params, 100.0, 1.2f64.ln()).unwrap();
    let long = McConfig { n_paths: 1, dt: 0.01, t_max: 200.0, seed: 42, n_workers: 1 };
    let short = McConfig { t_max: 2.0, ..long };
    let n = 4_000u64;
    let (mut sum_long, mut sum_short, mut truncated) = (0.0, 0.0, 0u64);
    for stream in 0..n {
        let full = simulate_path(&params, &contract, model.a_star(), &long, stream);
        let cut = simulate_path(&params, &contract, model.a_star(), &short, stream);
        sum_long += full.discounted_payoff;
        sum_short += cut.discounted_payoff;
        truncated += u64::from(cut.stop_kind == StopKind::Truncated);
        if cut.stop_kind != StopKind::Truncated {
            assert_eq!(
                full.discounted_payoff.to_bits(),
                cut.discounted_payoff.to_bits(),
                "paths stopped before the cut must agree bit for bit"
            );
        }
    }
    assert!(truncated > 0, "a 2-unit horizon must truncate some paths");
    let bound = contract.strike_k()
        * (-params.r() * short.t_max).exp()
        * (truncated as f64 / n as f64);
    let gap = (sum_long - sum_short) / n as f64;
    assert!(
        gap >= -1e-9 && gap <= bound + 1e-9,
        "horizon gap {gap} escapes [0, {bound}]"
    );

    let cfg = McConfig { n_paths: 4_000, ..short };
    let estimate = estimate_price(&params, &contract, model.a_star(), &cfg);
    assert!(estimate.truncation_bound > 0.0);
}

/// `e^{-rt} e^{X_t}` is a martingale of the simulated chain exactly (the
/// Gaussian increment and the Poisson-exponential jump factor both have unit
/// discounted mean), so the stopped mean must reproduce the starting price
/// within pure sampling noise at any `dt`.
#[test]
fn discounted_price_is_a_martingale_of_the_chain() {
    let params = figure_params();
    let contract = figure_state(96.0, 100.0);
    let cfg = McConfig { n_paths: 30_000, dt: 0.01, t_max: 50.0, seed: 42, n_workers: 1 };
    let a = contract.x() - 0.05;
    let n = cfg.n_paths;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for stream in 0..n {
        let out = simulate_path(&params, &contract, a, &cfg, stream as u64);
        let discounted = (-params.r() * out.stop_time).exp() * out.x_at_stop.exp();
        sum += discounted;
        sum_sq += discounted * discounted;
    }
    let mean = sum / n as f64;
    let variance = (sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0);
    let std_err = (variance / n as f64).sqrt();
    let start = contract.x().exp();
    assert!(
        (mean - start).abs() <= 4.0 * std_err,
        "stopped discounted price {mean} +- {std_err} misses the start {start}"
    );
}
