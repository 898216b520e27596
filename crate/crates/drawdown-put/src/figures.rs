//! CSV sweeps behind the `sweep` subcommand.
//!
//! Each figure id maps to a fixed grid over states or parameters and a metric
//! (price, barrier level, or the smooth-paste trio). Output is plain CSV with
//! a header row, LF line endings, and 12 significant digits, so repeated runs
//! are byte-identical.

use std::fmt::Write as _;

use crate::model::ModelParams;
use crate::pricer::PriceModel;
use crate::{Error, Result};

/// Figure ids accepted by `sweep --figure`.
pub const FIGURE_IDS: [&str; 9] = [
    "smooth-paste",
    "price-surface",
    "price-surface-zoom",
    "barrier-r-sigma",
    "value-r-sigma",
    "barrier-rho-lambda",
    "value-rho-lambda",
    "value-rho",
    "value-lambda",
];

/// Formats with 12 significant digits in plain decimal (no exponent), the
/// fixed CSV number format.
pub fn format_sig12(x: f64) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return "0".to_string();
    }
    let decimals = (11 - x.abs().log10().floor() as i64).clamp(0, 30) as usize;
    format!("{x:.decimals$}")
}

/// Builds the CSV for one named figure. The passed parameters and contract are
/// the baseline; parameter sweeps override their two swept dimensions and keep
/// the rest.
pub fn figure_csv(id: &str, params: &ModelParams, strike_k: f64, drawdown_c: f64) -> Result<String> {
    match id {
        "smooth-paste" => smooth_paste(params, strike_k, drawdown_c),
        "price-surface" => {
            let grid: Vec<f64> = (0..=50).map(|i| 60.0 + 2.0 * i as f64).collect();
            surface(params, strike_k, drawdown_c, &grid, &grid)
        }
        "price-surface-zoom" => {
            let grid: Vec<f64> = (0..=55).map(|i| 95.0 + i as f64).collect();
            surface(params, strike_k, drawdown_c, &grid, &grid)
        }
        "barrier-r-sigma" => param_sweep(strike_k, drawdown_c, &r_sigma_grid(), Metric::Barrier, |r, sigma| {
            ModelParams::new(r, sigma, params.lambda(), params.rho())
        }),
        "value-r-sigma" => param_sweep(strike_k, drawdown_c, &r_sigma_grid(), Metric::Value, |r, sigma| {
            ModelParams::new(r, sigma, params.lambda(), params.rho())
        }),
        "barrier-rho-lambda" => param_sweep(strike_k, drawdown_c, &rho_lambda_grid(), Metric::Barrier, |rho, lambda| {
            ModelParams::new(params.r(), params.sigma(), lambda, rho)
        }),
        "value-rho-lambda" => param_sweep(strike_k, drawdown_c, &rho_lambda_grid(), Metric::Value, |rho, lambda| {
            ModelParams::new(params.r(), params.sigma(), lambda, rho)
        }),
        "value-rho" => {
            let lambda = params.lambda();
            let grid: Vec<(f64, f64)> = (0..=95).map(|i| (0.5 + 0.1 * i as f64, lambda)).collect();
            param_sweep(strike_k, drawdown_c, &grid, Metric::Value, |rho, lambda| {
                ModelParams::new(params.r(), params.sigma(), lambda, rho)
            })
        }
        "value-lambda" => {
            let rho = params.rho();
            let grid: Vec<(f64, f64)> = (0..=40).map(|i| (0.05 * i as f64, rho)).collect();
            param_sweep(strike_k, drawdown_c, &grid, Metric::Value, |lambda, rho| {
                ModelParams::new(params.r(), params.sigma(), lambda, rho)
            })
        }
        _ => Err(Error::InvalidParameter(format!(
            "unknown figure id {id:?}; known ids: {}",
            FIGURE_IDS.join(", ")
        ))),
    }
}

/// CSV over a user-supplied price grid, same layout as the surface figures.
/// Grids must be nonempty, finite, positive, and sorted ascending.
pub fn custom_csv(
    params: &ModelParams,
    strike_k: f64,
    drawdown_c: f64,
    s_grid: &[f64],
    smax_grid: &[f64],
) -> Result<String> {
    for (name, grid) in [("s", s_grid), ("smax", smax_grid)] {
        if grid.is_empty() {
            return Err(Error::InvalidParameter(format!("{name} grid is empty")));
        }
        if grid.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} grid must be positive")));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("{name} grid must be strictly increasing")));
        }
    }
    surface(params, strike_k, drawdown_c, s_grid, smax_grid)
}

/// Diagonal states `x = xbar`: payoff, price, and the price formula continued
/// across the exercise barrier (tangent to the payoff there).
fn smooth_paste(params: &ModelParams, strike_k: f64, drawdown_c: f64) -> Result<String> {
    let model = PriceModel::new(params, strike_k, drawdown_c)?;
    let mut out = String::from("s,payoff,value,projection\n");
    for i in 0..=200u32 {
        let s = 60.0 + 0.5 * f64::from(i);
        let x = s.ln();
        let value = model.value(x, x)?;
        let row = [s, (strike_k - s).max(0.0), value, model.diagonal_projection(x)];
        push_row(&mut out, &row);
    }
    Ok(out)
}

/// Price over a rectangular `(s, smax)` grid in row-major order; the half of
/// the grid above the diagonal (`s > smax`) is outside the state space and is
/// emitted as 0, matching the flat shelf of the plotted surface.
fn surface(
    params: &ModelParams,
    strike_k: f64,
    drawdown_c: f64,
    s_grid: &[f64],
    smax_grid: &[f64],
) -> Result<String> {
    let model = PriceModel::new(params, strike_k, drawdown_c)?;
    let mut out = String::from("x,xbar,value\n");
    for &s in s_grid {
        for &smax in smax_grid {
            let value = if s > smax { 0.0 } else { model.value(s.ln(), smax.ln())? };
            push_row(&mut out, &[s, smax, value]);
        }
    }
    Ok(out)
}

enum Metric {
    Barrier,
    Value,
}

fn r_sigma_grid() -> Vec<(f64, f64)> {
    let mut grid = Vec::new();
    for i in 1..=25u32 {
        for j in 0..=20u32 {
            grid.push((0.02 * f64::from(i), 0.10 + 0.02 * f64::from(j)));
        }
    }
    grid
}

fn rho_lambda_grid() -> Vec<(f64, f64)> {
    let mut grid = Vec::new();
    for i in 0..=25u32 {
        for j in 1..=20u32 {
            grid.push((1.0 + 0.2 * f64::from(i), 0.05 * f64::from(j)));
        }
    }
    grid
}

/// Two-parameter sweep; `make` maps a grid point to a parameter set. Barrier
/// figures report the asset-scale barrier `e^{a*}`, value figures the price at
/// the at-the-money diagonal state `s = smax = K`.
fn param_sweep(
    strike_k: f64,
    drawdown_c: f64,
    grid: &[(f64, f64)],
    metric: Metric,
    make: impl Fn(f64, f64) -> Result<ModelParams>,
) -> Result<String> {
    let mut out = String::from("param1,param2,metric\n");
    for &(p1, p2) in grid {
        let params = make(p1, p2)?;
        let model = PriceModel::new(&params, strike_k, drawdown_c)?;
        let value = match metric {
            Metric::Barrier => model.a_star().exp(),
            Metric::Value => model.value(strike_k.ln(), strike_k.ln())?,
        };
        push_row(&mut out, &[p1, p2, value]);
    }
    Ok(out)
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{}", format_sig12(*v)).expect("writing to a String cannot fail");
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_params() -> ModelParams {
        ModelParams::new(0.1, 0.2, 0.2, 3.0).unwrap()
    }

    #[test]
    fn twelve_significant_digits_in_plain_decimal() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(100.0), "100.000000000");
        assert_eq!(format_sig12(8.794567610637129), "8.79456761064");
        assert_eq!(format_sig12(82.56292845305121), "82.5629284531");
        assert_eq!(format_sig12(0.06), "0.0600000000000");
        assert_eq!(format_sig12(-1.5), "-1.50000000000");
    }

    #[test]
    fn every_figure_id_yields_a_csv_with_its_header() {
        let params = figure_params();
        for id in FIGURE_IDS {
            let csv = figure_csv(id, &params, 100.0, 1.2f64.ln()).unwrap();
            let mut lines = csv.lines();
            let header = lines.next().unwrap();
            match id {
                "smooth-paste" => assert_eq!(header, "s,payoff,value,projection"),
                "price-surface" | "price-surface-zoom" => assert_eq!(header, "x,xbar,value"),
                _ => assert_eq!(header, "param1,param2,metric"),
            }
            assert!(lines.count() > 0, "{id} produced no data rows");
            assert!(csv.ends_with('\n') && !csv.contains('\r'));
        }
        assert!(figure_csv("no-such-figure", &params, 100.0, 0.18).is_err());
    }

    #[test]
    fn surface_grid_order_and_zero_shelf() {
        let params = figure_params();
        let csv = figure_csv("price-surface", &params, 100.0, 1.2f64.ln()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 51 * 51);
        // First row is the deep-in-the-money corner, already stopped: payoff 40.
        assert_eq!(lines[1], "60.0000000000,60.0000000000,40.0000000000");
        // s > smax lies outside the state space and prints the zero shelf.
        assert_eq!(lines[52], "62.0000000000,60.0000000000,0");
    }

    #[test]
    fn sweeps_are_byte_identical_across_runs() {
        let params = figure_params();
        for id in ["smooth-paste", "barrier-r-sigma"] {
            let first = figure_csv(id, &params, 100.0, 1.2f64.ln()).unwrap();
            let second = figure_csv(id, &params, 100.0, 1.2f64.ln()).unwrap();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn custom_grid_validation() {
        let params = figure_params();
        let csv = custom_csv(&params, 100.0, 1.2f64.ln(), &[90.0, 95.0], &[100.0, 110.0]).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(custom_csv(&params, 100.0, 0.18, &[], &[100.0]).is_err());
        assert!(custom_csv(&params, 100.0, 0.18, &[95.0, 90.0], &[100.0]).is_err());
        assert!(custom_csv(&params, 100.0, 0.18, &[90.0, -5.0], &[100.0]).is_err());
    }

    #[test]
    fn lambda_sweep_crosses_the_diffusion_branch() {
        let params = figure_params();
        let csv = figure_csv("value-lambda", &params, 100.0, 1.2f64.ln()).unwrap();
        let first_row = csv.lines().nth(1).unwrap();
        assert!(first_row.starts_with("0,3.00000000000,"));
    }
}
