//! Market model: parameters of the log-price process and its Laplace exponent,
//! plus the exponentially tilted (dual) parameter set used for drawdown formulas.

use crate::{Error, Result};

/// Parameters of the log price `X_t = x + mu t + sigma B_t - sum U_k` under the
/// pricing measure.
///
/// The drift `mu` is always derived from the other four parameters through the
/// martingale constraint `mu = r - sigma^2/2 + lambda/(1+rho)`, equivalently
/// `psi(1) = r`, so that the discounted asset price is a martingale. It is never
/// accepted as an input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    r: f64,
    sigma: f64,
    lambda: f64,
    rho: f64,
    mu: f64,
}

impl ModelParams {
    /// Builds a parameter set and derives the drift.
    ///
    /// `lambda = 0` switches the model to its pure-diffusion branch, in which
    /// `rho` is ignored. `sigma = 0` is rejected: with jumps present the scale
    /// coefficients divide by `sigma^2`, and without jumps the process would be
    /// deterministic.
    pub fn new(r: f64, sigma: f64, lambda: f64, rho: f64) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::InvalidParameter(format!("r = {r} must be positive")));
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be nonnegative")));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be nonnegative")));
        }
        if sigma == 0.0 && lambda > 0.0 {
            return Err(Error::InvalidParameter(
                "sigma = 0 with lambda > 0: the exponential scale basis divides by sigma^2".into(),
            ));
        }
        if sigma == 0.0 && lambda == 0.0 {
            return Err(Error::InvalidParameter("sigma = 0 and lambda = 0: the asset never moves".into()));
        }
        if lambda > 0.0 && (!rho.is_finite() || rho <= 0.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be positive when lambda > 0")));
        }
        // On the diffusion branch the jump-size parameter is meaningless; store
        // zero so formulas with rho in a denominator shift stay well defined.
        let rho = if lambda > 0.0 { rho } else { 0.0 };
        let jump_drift = if lambda > 0.0 { lambda / (1.0 + rho) } else { 0.0 };
        let mu = r - sigma * sigma / 2.0 + jump_drift;
        Ok(Self { r, sigma, lambda, rho, mu })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Drift derived from the martingale constraint.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Laplace exponent `psi(theta) = mu theta + sigma^2 theta^2 / 2 -
    /// lambda theta / (theta + rho)`, so that `E[e^{theta(X_t - X_0)}] = e^{psi(theta) t}`.
    ///
    /// `psi(0) = 0` and, under the martingale constraint, `psi(1) = r`. When
    /// `lambda > 0` the exponent has a pole at `theta = -rho`, reported as an error.
    pub fn laplace_exponent(&self, theta: f64) -> Result<f64> {
        if self.lambda > 0.0 && (theta + self.rho).abs() <= 1e-12 * self.rho.max(1.0) {
            return Err(Error::LaplacePole(theta));
        }
        Ok(self.psi(theta))
    }

    pub(crate) fn psi(&self, theta: f64) -> f64 {
        let jump = if self.lambda > 0.0 { self.lambda * theta / (theta + self.rho) } else { 0.0 };
        self.mu * theta + self.sigma * self.sigma * theta * theta / 2.0 - jump
    }

    pub(crate) fn psi_prime(&self, theta: f64) -> f64 {
        let jump = if self.lambda > 0.0 {
            let d = theta + self.rho;
            self.lambda * self.rho / (d * d)
        } else {
            0.0
        };
        self.mu + self.sigma * self.sigma * theta - jump
    }

    /// Parameter set of the process under the tilted measure obtained from the
    /// density `e^{X_t - x - r t}`: drift `mu + sigma^2`, intensity
    /// `lambda rho/(rho+1)`, jump rate `rho + 1`, and discounting rate 0.
    ///
    /// The returned set satisfies `psi_dual(theta) = psi(theta + 1) - r` and is
    /// not a valid pricing parameter set itself (its `r` is zero); it exists to
    /// evaluate the tilted Laplace exponent and the dual scale basis.
    pub fn dual(&self) -> ModelParams {
        let (lambda, rho) = if self.lambda > 0.0 {
            (self.lambda * self.rho / (self.rho + 1.0), self.rho + 1.0)
        } else {
            (0.0, self.rho + 1.0)
        };
        ModelParams {
            r: 0.0,
            sigma: self.sigma,
            lambda,
            rho,
            mu: self.mu + self.sigma * self.sigma,
        }
    }
}

/// Contract terms together with the market state they are evaluated at: strike,
/// drawdown threshold (log scale, the asset-ratio cap is `e^c`), current
/// log price `x`, and running-maximum log price `xbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractState {
    strike_k: f64,
    drawdown_c: f64,
    x: f64,
    xbar: f64,
}

impl ContractState {
    pub fn new(strike_k: f64, drawdown_c: f64, x: f64, xbar: f64) -> Result<Self> {
        if !strike_k.is_finite() || strike_k <= 0.0 {
            return Err(Error::InvalidParameter(format!("strike K = {strike_k} must be positive")));
        }
        if !drawdown_c.is_finite() || drawdown_c <= 0.0 {
            return Err(Error::InvalidParameter(format!("drawdown level c = {drawdown_c} must be positive")));
        }
        if !x.is_finite() || !xbar.is_finite() || x > xbar {
            return Err(Error::InvalidState { x, xbar });
        }
        Ok(Self { strike_k, drawdown_c, x, xbar })
    }

    pub fn strike_k(&self) -> f64 {
        self.strike_k
    }

    pub fn drawdown_c(&self) -> f64 {
        self.drawdown_c
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn xbar(&self) -> f64 {
        self.xbar
    }
}
