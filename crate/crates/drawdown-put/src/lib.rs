//! Pricing of a perpetual American put whose lifetime is capped by the first
//! drawdown epoch of the underlying: the option dies the moment the asset falls
//! a fixed ratio `e^c` below its running maximum, paying `(K - S)^+` there.
//!
//! The asset is a geometric jump-diffusion, `S_t = e^{X_t}` with
//! `X_t = x + mu t + sigma B_t - sum_{k<=N_t} U_k`, `U_k ~ Exp(rho)` downward
//! jumps, drift pinned by the martingale constraint `mu = r - sigma^2/2 +
//! lambda/(1+rho)`. The price and the optimal exercise barrier come in closed
//! form through the scale functions of the process; a Monte Carlo simulator
//! provides an independent check, and the CLI reproduces the numerical study
//! (figures as CSV, verification suite).

pub mod cli;
pub mod figures;
pub mod mc;
pub mod model;
pub mod pricer;
pub mod scale;
pub mod verify;

pub use mc::{estimate_price, simulate_path, McConfig, PathOutcome, PriceEstimate, StopKind};
pub use model::{ContractState, ModelParams};
pub use pricer::{PriceModel, RegimeTag};
pub use scale::{DrawdownConstants, Measure, ScaleBasis};

/// Everything that can go wrong when building models or evaluating prices.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Laplace exponent has a pole at theta = {0}")]
    LaplacePole(f64),
    #[error("scale exponents {0} and {1} nearly coincide; the partial-fraction basis is undefined")]
    DegenerateExponents(f64, f64),
    #[error("no sign change found while bracketing the optimal barrier ({0} doublings)")]
    BarrierBracketing(u32),
    #[error("state (x = {x}, xbar = {xbar}) is outside the regime of block V{id}")]
    OutOfRegime { id: u8, x: f64, xbar: f64 },
    #[error("invalid state: x = {x} exceeds xbar = {xbar}")]
    InvalidState { x: f64, xbar: f64 },
}

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
