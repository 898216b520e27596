//! Monte Carlo oracle for the stopped put.
//!
//! Simulates the log price on a fixed Euler grid, applies the stopping rule
//! (barrier hit or drawdown completion, whichever first), and averages the
//! discounted payoff. The estimator is independent of the closed-form pricer:
//! it never touches scale functions, only the process definition and the
//! stopping rule, which is what makes it useful as a check.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use crate::model::{ContractState, ModelParams};

/// Simulation settings. Estimates are bit-reproducible for a fixed
/// `(seed, n_workers)` pair; changing the worker count reshuffles the random
/// streams, so only the distribution of the estimate is preserved.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_paths: usize,
    /// Euler step, time units. The running maximum is monitored on the grid
    /// only, so drawdown times are biased slightly late at coarse steps.
    pub dt: f64,
    /// Horizon cap; paths still alive here count payoff 0 and are tallied into
    /// the truncation bound `K e^{-r t_max} (fraction truncated)`.
    pub t_max: f64,
    pub seed: u64,
    pub n_workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 200_000, dt: 1e-3, t_max: 400.0, seed: 42, n_workers: 1 }
    }
}

/// How a simulated path ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopKind {
    /// Log price at or below the exercise barrier (jumps may overshoot it).
    Barrier,
    /// Drawdown reached the threshold: `xbar - x >= c` at a grid point.
    Drawdown,
    /// Still alive at `t_max`.
    Truncated,
}

/// Terminal state of one simulated path.
#[derive(Debug, Clone, Copy)]
pub struct PathOutcome {
    pub stop_time: f64,
    pub stop_kind: StopKind,
    pub x_at_stop: f64,
    pub xbar_at_stop: f64,
    /// `e^{-r stop_time} (K - e^{x_at_stop})^+`, or 0 for a truncated path.
    pub discounted_payoff: f64,
}

/// Sample mean of the discounted payoff with its standard error and the
/// worst-case bias from truncated paths.
#[derive(Debug, Clone, Copy)]
pub struct PriceEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub truncation_bound: f64,
}

/// Neumaier-compensated accumulator; keeps long payoff sums exact to the last
/// bit, so a degenerate estimate (all paths identical) reproduces the payoff
/// with zero error.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, value: f64) {
        let t = self.sum + value;
        self.compensation += if self.sum.abs() >= value.abs() {
            (self.sum - t) + value
        } else {
            (value - t) + self.sum
        };
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn check_config(cfg: &McConfig) {
    assert!(cfg.dt > 0.0 && cfg.dt.is_finite(), "dt must be positive");
    assert!(cfg.t_max > 0.0 && cfg.t_max.is_finite(), "t_max must be positive");
    assert!(cfg.n_paths >= 1, "need at least one path");
    assert!(cfg.n_workers >= 1, "need at least one worker");
}

/// Simulates a single path on the random stream `stream` and returns where and
/// how it stopped.
///
/// Per step: a Gaussian increment `mu dt + sigma sqrt(dt) Z` (exact in
/// distribution), then the running maximum update, then `Poisson(lambda dt)`
/// downward exponential jumps applied at the step end. The stopping rule is
/// checked on the grid, barrier before drawdown; states already stopped at
/// `t = 0` return immediately with an undiscounted payoff.
pub fn simulate_path(
    params: &ModelParams,
    contract: &ContractState,
    a: f64,
    cfg: &McConfig,
    stream: u64,
) -> PathOutcome {
    check_config(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    run_path(params, contract, a, cfg, &mut rng)
}

fn run_path(
    params: &ModelParams,
    contract: &ContractState,
    a: f64,
    cfg: &McConfig,
    rng: &mut ChaCha8Rng,
) -> PathOutcome {
    let k_strike = contract.strike_k();
    let c = contract.drawdown_c();
    let r = params.r();
    let mut x = contract.x();
    let mut xbar = contract.xbar();

    let outcome = |kind: StopKind, t: f64, x: f64, xbar: f64| {
        let payoff = if kind == StopKind::Truncated {
            0.0
        } else {
            (-r * t).exp() * (k_strike - x.exp()).max(0.0)
        };
        PathOutcome { stop_time: t, stop_kind: kind, x_at_stop: x, xbar_at_stop: xbar, discounted_payoff: payoff }
    };

    if x <= a {
        return outcome(StopKind::Barrier, 0.0, x, xbar);
    }
    if xbar - x >= c {
        return outcome(StopKind::Drawdown, 0.0, x, xbar);
    }

    let drift_dt = params.mu() * cfg.dt;
    let sig_sqdt = params.sigma() * cfg.dt.sqrt();
    let lambda = params.lambda();
    let jumps = if lambda > 0.0 {
        Some((
            Poisson::new(lambda * cfg.dt).expect("lambda dt is positive and finite"),
            Exp::new(params.rho()).expect("rho is positive"),
        ))
    } else {
        None
    };

    let n_steps = (cfg.t_max / cfg.dt).ceil() as u64;
    for step in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += drift_dt + sig_sqdt * z;
        if x > xbar {
            xbar = x;
        }
        if let Some((poisson, mark)) = &jumps {
            let count = poisson.sample(rng) as u64;
            for _ in 0..count {
                x -= mark.sample(rng);
            }
        }
        if x <= a {
            return outcome(StopKind::Barrier, (step + 1) as f64 * cfg.dt, x, xbar);
        }
        if xbar - x >= c {
            return outcome(StopKind::Drawdown, (step + 1) as f64 * cfg.dt, x, xbar);
        }
    }
    outcome(StopKind::Truncated, cfg.t_max, x, xbar)
}

/// Estimates the option value at the contract state for the exercise barrier
/// `a` by straight averaging over `cfg.n_paths` simulated paths.
///
/// Paths are split across `cfg.n_workers` threads; worker `i` owns random
/// stream `i` and simulates its chunk sequentially from it, so the result is
/// bit-reproducible for a fixed seed and worker count. Truncated paths count
/// as 0 and only widen `truncation_bound`.
pub fn estimate_price(
    params: &ModelParams,
    contract: &ContractState,
    a: f64,
    cfg: &McConfig,
) -> PriceEstimate {
    check_config(cfg);
    let workers = cfg.n_workers.min(cfg.n_paths);
    let base = cfg.n_paths / workers;
    let extra = cfg.n_paths % workers;

    let mut partials = vec![(0.0f64, 0.0f64, 0usize); workers];
    thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for i in 0..workers {
            let chunk = base + usize::from(i < extra);
            handles.push(scope.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                let mut sum = CompensatedSum::default();
                let mut sum_sq = CompensatedSum::default();
                let mut truncated = 0usize;
                for _ in 0..chunk {
                    let out = run_path(params, contract, a, cfg, &mut rng);
                    sum.add(out.discounted_payoff);
                    sum_sq.add(out.discounted_payoff * out.discounted_payoff);
                    truncated += usize::from(out.stop_kind == StopKind::Truncated);
                }
                (sum.total(), sum_sq.total(), truncated)
            }));
        }
        for (i, handle) in handles.into_iter().enumerate() {
            partials[i] = handle.join().expect("simulation worker panicked");
        }
    });

    let n = cfg.n_paths as f64;
    let (mut sum, mut sum_sq, mut truncated) = (0.0, 0.0, 0usize);
    for (s, s2, tr) in partials {
        sum += s;
        sum_sq += s2;
        truncated += tr;
    }
    let mean = sum / n;
    let variance = if cfg.n_paths > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    PriceEstimate {
        mean,
        std_err: (variance / n).sqrt(),
        truncation_bound: contract.strike_k() * (-params.r() * cfg.t_max).exp() * (truncated as f64 / n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_params() -> ModelParams {
        ModelParams::new(0.1, 0.2, 0.2, 3.0).unwrap()
    }

    #[test]
    fn immediate_barrier_stop_is_deterministic() {
        let params = figure_params();
        let contract = ContractState::new(100.0, 1.2f64.ln(), 4.3, 4.35).unwrap();
        let cfg = McConfig { n_paths: 64, ..McConfig::default() };
        let est = estimate_price(&params, &contract, 4.4, &cfg);
        assert_eq!(est.mean, 100.0 - 4.3f64.exp());
        assert_eq!(est.std_err, 0.0);
        assert_eq!(est.truncation_bound, 0.0);
        let path = simulate_path(&params, &contract, 4.4, &cfg, 0);
        assert_eq!(path.stop_kind, StopKind::Barrier);
        assert_eq!(path.stop_time, 0.0);
    }

    #[test]
    fn immediate_drawdown_stop_pays_undiscounted() {
        let params = figure_params();
        let c = 1.2f64.ln();
        let contract = ContractState::new(100.0, c, 4.5, 4.5 + c + 0.01).unwrap();
        let cfg = McConfig { n_paths: 8, ..McConfig::default() };
        let path = simulate_path(&params, &contract, 4.0, &cfg, 3);
        assert_eq!(path.stop_kind, StopKind::Drawdown);
        assert_eq!(path.stop_time, 0.0);
        assert_eq!(path.discounted_payoff, 100.0 - 4.5f64.exp());
    }

    #[test]
    fn estimates_are_bit_reproducible() {
        let params = figure_params();
        let contract = ContractState::new(100.0, 1.2f64.ln(), 90.0f64.ln(), 100.0f64.ln()).unwrap();
        let cfg = McConfig { n_paths: 2_000, dt: 0.01, t_max: 50.0, seed: 7, n_workers: 3 };
        let first = estimate_price(&params, &contract, 4.41, &cfg);
        let second = estimate_price(&params, &contract, 4.41, &cfg);
        assert_eq!(first.mean.to_bits(), second.mean.to_bits());
        assert_eq!(first.std_err.to_bits(), second.std_err.to_bits());
        assert_eq!(first.truncation_bound.to_bits(), second.truncation_bound.to_bits());
        let other_seed = estimate_price(&params, &contract, 4.41, &McConfig { seed: 8, ..cfg });
        assert_ne!(first.mean.to_bits(), other_seed.mean.to_bits());
    }

    #[test]
    fn truncation_bound_covers_a_horizon_too_short_to_stop() {
        let params = figure_params();
        let contract = ContractState::new(100.0, 5.0, 100.0f64.ln(), 100.0f64.ln()).unwrap();
        let cfg = McConfig { n_paths: 200, dt: 1e-3, t_max: 0.01, seed: 1, n_workers: 1 };
        let est = estimate_price(&params, &contract, -50.0, &cfg);
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.truncation_bound, 100.0 * (-params.r() * 0.01f64).exp());
    }

    #[test]
    fn payoffs_stay_inside_the_strike_bound() {
        let params = figure_params();
        let contract = ContractState::new(100.0, 1.2f64.ln(), 95.0f64.ln(), 96.0f64.ln()).unwrap();
        let cfg = McConfig { n_paths: 500, dt: 0.01, t_max: 20.0, seed: 5, n_workers: 2 };
        for stream in 0..4 {
            let out = simulate_path(&params, &contract, 4.413, &cfg, stream);
            assert!(out.discounted_payoff >= 0.0 && out.discounted_payoff <= 100.0);
            match out.stop_kind {
                StopKind::Barrier => assert!(out.x_at_stop <= 4.413),
                StopKind::Drawdown => assert!(out.xbar_at_stop - out.x_at_stop >= contract.drawdown_c()),
                StopKind::Truncated => assert_eq!(out.discounted_payoff, 0.0),
            }
        }
        let est = estimate_price(&params, &contract, 4.413, &cfg);
        assert!(est.mean >= 0.0 && est.mean <= 100.0);
    }
}
