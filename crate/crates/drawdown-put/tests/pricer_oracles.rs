//! Oracles for the pricer: the high-band entry block is rebuilt from its
//! defining first-passage integral, the two evaluation paths of the barrier
//! equation are cross-checked away from the figure parameters, and the solved
//! barrier is certified by the paste conditions it must create.

use drawdown_put::{ModelParams, PriceModel};

fn figure_model() -> PriceModel {
    let params = ModelParams::new(0.1, 0.2, 0.2, 3.0).unwrap();
    PriceModel::new(&params, 100.0, 1.2f64.ln()).unwrap()
}

fn composite_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 2 && panels % 2 == 0, "need an even panel count");
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// The block priced at a fresh maximum above the strike band: expected
/// discounted payoff when the drawdown fires by a jump before the maximum
/// moves. Rebuilt here as the iterated integral of the payoff against the
/// first-crossing kernel over undershoot depth `y` and pre-jump position `z`,
/// with the inner integral split where the kernel loses its second term.
fn high_entry_oracle(model: &PriceModel, x: f64, xbar: f64) -> f64 {
    let basis = model.basis_q();
    let params = model.params();
    let (k, c) = (model.strike_k(), model.drawdown_c());
    let (lambda, rho) = (params.lambda(), params.rho());
    let u = x + c - xbar;
    let y_floor = xbar - c - k.ln();
    assert!(y_floor >= 0.0 && u > 0.0 && u <= c, "state must sit in the high band");

    let (w_u, w_c) = (basis.w(u), basis.w(c));
    let kernel = |z: f64| (w_u * basis.w(c - z) - w_c * basis.w(u - z)) / w_c;
    let split = u.min(c);
    let inner = composite_simpson(|z| (-rho * z).exp() * kernel(z), 0.0, split, 512)
        + composite_simpson(|z| (-rho * z).exp() * kernel(z), split, c, 512);

    composite_simpson(
        |y| (k - (xbar - c - y).exp()) * lambda * rho * (-rho * y).exp() * inner,
        y_floor,
        y_floor + 40.0 / rho,
        2048,
    )
}

#[test]
fn high_entry_block_matches_its_defining_integral() {
    let model = figure_model();
    let c = model.drawdown_c();
    let lk = model.strike_k().ln();
    for (xbar, back) in [(lk + c + 0.02, 0.3), (lk + c + 0.02, 0.85), (lk + c + 0.4, 0.5)] {
        let x = xbar - back * c;
        let closed = model.v_block(14, x, xbar).unwrap();
        let oracle = high_entry_oracle(&model, x, xbar);
        assert!(
            (closed - oracle).abs() <= 1e-6 * closed.abs(),
            "block {closed} vs integral {oracle} at (x, xbar) = ({x}, {xbar})"
        );
    }

    let params = ModelParams::new(0.07, 0.35, 0.6, 1.5).unwrap();
    let model = PriceModel::new(&params, 80.0, 0.3).unwrap();
    let xbar = 80.0f64.ln() + 0.3 + 0.1;
    let x = xbar - 0.15;
    let closed = model.v_block(14, x, xbar).unwrap();
    let oracle = high_entry_oracle(&model, x, xbar);
    assert!(
        (closed - oracle).abs() <= 1e-6 * closed.abs(),
        "block {closed} vs integral {oracle} off the figure parameters"
    );
}

#[test]
fn barrier_residual_paths_agree_away_from_the_figure() {
    let sets = [
        (0.1, 0.2, 0.2, 3.0, 100.0, 1.2f64.ln()),
        (0.05, 0.35, 0.8, 1.5, 80.0, 0.25),
        (0.22, 0.15, 0.4, 6.0, 120.0, 0.10),
        (0.08, 0.45, 1.5, 0.8, 50.0, 0.50),
        (0.1, 0.2, 0.0, 0.0, 100.0, 1.2f64.ln()),
    ];
    for (r, sigma, lambda, rho, k, c) in sets {
        let params = ModelParams::new(r, sigma, lambda, rho).unwrap();
        let model = PriceModel::new(&params, k, c).unwrap();
        let lk = k.ln();
        for offset in [3.0, 1.5, 0.6, 0.2, 0.05] {
            let a = lk - offset;
            let closed = model.barrier_residual(a);
            let blocks = model.barrier_residual_from_blocks(a);
            assert!(
                (closed - blocks).abs() <= 1e-10 * closed.abs().max(1e-6 * k),
                "residual paths disagree at a = {a}: {closed} vs {blocks} (lambda = {lambda})"
            );
        }
    }
}

#[test]
fn solved_barrier_creates_both_paste_conditions() {
    let sets = [
        (0.1, 0.2, 0.2, 3.0, 100.0, 1.2f64.ln()),
        (0.05, 0.35, 0.8, 1.5, 80.0, 0.25),
        (0.15, 0.25, 0.0, 0.0, 60.0, 0.35),
    ];
    for (r, sigma, lambda, rho, k, c) in sets {
        let params = ModelParams::new(r, sigma, lambda, rho).unwrap();
        let model = PriceModel::new(&params, k, c).unwrap();
        let a = model.a_star();
        assert!(a < k.ln(), "barrier must sit below the strike");
        assert!(model.barrier_residual(a).abs() <= 1e-12 * k);

        for q in [0.3, 0.7] {
            let xbar = a + q * c;
            let level = model.value(a + 1e-14, xbar).unwrap();
            assert!(
                (level - (k - a.exp())).abs() <= 1e-9 * k,
                "value at the barrier is {level}, payoff is {}",
                k - a.exp()
            );
            let slope = |h: f64| {
                (model.value(a + 2.0 * h, xbar).unwrap() - model.value(a, xbar).unwrap())
                    / (2.0 * h)
            };
            let extrapolated = (10.0 * slope(1e-5) - slope(1e-4)) / 9.0;
            assert!(
                (extrapolated + a.exp()).abs() <= 1e-6 * a.exp(),
                "slope at the barrier is {extrapolated}, payoff slope is {}",
                -a.exp()
            );
        }
    }
}

#[test]
fn frozen_states_reprice_identically() {
    let model = figure_model();
    assert!((model.a_star() - 4.413560771708004).abs() <= 1e-12);
    let table = [
        (95.0f64, 96.0f64, 8.794567610637129),
        (100.0, 110.0, 5.891038691786294),
        (125.0, 135.0, 1.3696713005668484),
        (80.0, 100.0, 20.0),
    ];
    for (s, smax, want) in table {
        let have = model.value(s.ln(), smax.ln()).unwrap();
        assert!(
            (have - want).abs() <= 1e-11,
            "price drifted at (s, smax) = ({s}, {smax}): {have} vs {want}"
        );
    }
}
