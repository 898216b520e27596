//! Scale functions of the log-price process as exponential sums.
//!
//! `W(x) = sum_i C_i e^{gamma_i x}` (zero for `x < 0`) is defined through its
//! Laplace transform `int_0^inf e^{-beta x} W(x) dx = 1/(psi(beta) - r)`; the
//! companion function is `Z(x) = 1 + r int_0^x W`. First-passage and drawdown
//! functionals of the process reduce to evaluations of `W`, `Z` and the three
//! drawdown constants `(eta, Delta, Gamma)` computed here, under both the
//! pricing measure and its exponential tilt.

use crate::model::ModelParams;
use crate::{Error, Result};

/// Probability measure a basis or constant set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Risk-neutral pricing measure; discounting at rate `r`.
    Pricing,
    /// Exponential tilt by `e^{X_t - x - rt}`; discounting rate 0.
    Dual,
}

/// Exponents and coefficients of the exponential-sum representation of `W` and `Z`.
///
/// Three terms when jumps are present (`gamma_1 = 1` exactly under the pricing
/// measure, `gamma_2, gamma_3 < 0`), two when `lambda = 0`. The parameter set the
/// basis was built from travels with it so that measure-specific constants can be
/// derived later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleBasis {
    gammas: [f64; 3],
    coeffs: [f64; 3],
    n_terms: usize,
    r_used: f64,
    measure: Measure,
    params: ModelParams,
}

/// Threshold below which two exponents count as a repeated root.
const DEGENERATE_GAP: f64 = 1e-9;

impl ScaleBasis {
    /// Builds the pricing-measure basis for the given parameters.
    ///
    /// With jumps, `psi(theta) = r` has the three roots `gamma_1 = 1` (the
    /// martingale constraint) and a closed-form negative pair, polished by one
    /// Newton step each; the coefficients are the partial-fraction residues
    /// `C_i = 2(gamma_i + rho) / (sigma^2 prod_{j != i}(gamma_i - gamma_j))`.
    /// Without jumps the quadratic `sigma^2 theta^2/2 + mu theta - r` has roots
    /// `{1, -2r/sigma^2}` and residues `C_i = 1/psi'(gamma_i)`.
    pub fn for_params(params: &ModelParams) -> Result<Self> {
        let (r, sigma, lambda, rho) = (params.r(), params.sigma(), params.lambda(), params.rho());
        let sig2 = sigma * sigma;

        let (gammas, coeffs, n_terms) = if lambda > 0.0 {
            let omega = lambda * lambda
                + lambda * (rho + 1.0) * (2.0 * r + rho * sig2)
                + (rho + 1.0) * (rho + 1.0) * (r - rho * sig2 / 2.0) * (r - rho * sig2 / 2.0);
            let base = 2.0 * lambda + 2.0 * r + rho * rho * sig2 + rho * sig2 + 2.0 * r * rho;
            let denom = 2.0 * sig2 * (rho + 1.0);
            let mut g2 = -(base - 2.0 * omega.sqrt()) / denom;
            let mut g3 = -(base + 2.0 * omega.sqrt()) / denom;
            // One Newton step on psi(theta) - r recovers precision lost to
            // cancellation in the closed form when omega is large.
            for g in [&mut g2, &mut g3] {
                let step = (params.psi(*g) - r) / params.psi_prime(*g);
                if step.is_finite() {
                    *g -= step;
                }
            }
            let gammas = [1.0, g2, g3];
            for i in 0..3 {
                for j in (i + 1)..3 {
                    if (gammas[i] - gammas[j]).abs() < DEGENERATE_GAP {
                        return Err(Error::DegenerateExponents(gammas[i], gammas[j]));
                    }
                }
            }
            let mut coeffs = [0.0; 3];
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                coeffs[i] = 2.0 * (gammas[i] + rho)
                    / (sig2 * (gammas[i] - gammas[j]) * (gammas[i] - gammas[k]));
            }
            (gammas, coeffs, 3)
        } else {
            let gammas = [1.0, -2.0 * r / sig2, 0.0];
            let coeffs = [1.0 / params.psi_prime(gammas[0]), 1.0 / params.psi_prime(gammas[1]), 0.0];
            (gammas, coeffs, 2)
        };

        Ok(Self { gammas, coeffs, n_terms, r_used: r, measure: Measure::Pricing, params: *params })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas[..self.n_terms]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.n_terms]
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// Discount rate the basis solves `psi(gamma) = r_used` for (0 for the dual).
    pub fn r_used(&self) -> f64 {
        self.r_used
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    /// Parameter set the basis was built from (tilted set for the dual basis).
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `W(x) = sum C_i e^{gamma_i x}` for `x >= 0`, zero on the negative axis.
    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.term_sum(x, 0)
    }

    /// Right derivative of `W`; at 0 this is the one-sided limit `2/sigma^2`.
    pub fn w_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.term_sum(x, 1)
    }

    pub fn w_second(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.term_sum(x, 2)
    }

    /// Exponential sum without the negative-axis cutoff: the analytic
    /// continuation of `W` used to draw the smooth-paste projection.
    pub(crate) fn w_unclipped(&self, x: f64) -> f64 {
        self.term_sum(x, 0)
    }

    /// Analytic continuation of `Z` across 0 (same formula, no cutoff).
    pub(crate) fn z_unclipped(&self, x: f64) -> f64 {
        if self.r_used == 0.0 {
            return 1.0;
        }
        let mut acc = 1.0;
        for i in 0..self.n_terms {
            let g = self.gammas[i];
            // (e^{gx} - 1)/g, continuous through g = 0.
            let growth = if g.abs() < 1e-12 { x } else { ((g * x).exp() - 1.0) / g };
            acc += self.r_used * self.coeffs[i] * growth;
        }
        acc
    }

    fn term_sum(&self, x: f64, order: u32) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_terms {
            let g = self.gammas[i];
            acc += self.coeffs[i] * g.powi(order as i32) * (g * x).exp();
        }
        acc
    }

    /// `Z(x) = 1 + r int_0^x W(y) dy`, identically 1 for `x <= 0` (and for the
    /// dual basis, whose discount rate is 0).
    pub fn z(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.z_unclipped(x)
    }

    /// `Z'(x) = r W(x)` for `x > 0`, zero on the negative axis.
    pub fn z_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.r_used * self.w(x)
    }

    /// Basis of the tilted measure: `gamma~_i = gamma_i - 1`, `C~_i = C_i`,
    /// discount rate 0, so that `W_dual(x) = e^{-x} W(x)` and `Z_dual = 1`.
    ///
    /// The shift is the only correct construction: re-running the root closed
    /// form on the tilted parameters would pin a root at 1 where the tilted
    /// exponent actually has one at 0.
    pub fn dual(&self) -> ScaleBasis {
        assert!(self.measure == Measure::Pricing, "dual() takes the pricing-measure basis");
        let mut gammas = self.gammas;
        for g in gammas[..self.n_terms].iter_mut() {
            *g -= 1.0;
        }
        ScaleBasis {
            gammas,
            coeffs: self.coeffs,
            n_terms: self.n_terms,
            r_used: 0.0,
            measure: Measure::Dual,
            params: self.params.dual(),
        }
    }

    /// Drawdown constants at threshold `c` for this basis's measure:
    /// `eta = W'(c)/W(c)`, the creeping weight
    /// `Delta = (sigma^2/2)(W'(c) - W''(c)/eta)`, and the jump weight
    /// `Gamma = lambda sum_i C_i/(gamma_i + rho) (gamma_i/eta - 1) e^{gamma_i c}`
    /// (zero without jumps). `Delta + Gamma` is the expected discount factor to
    /// the drawdown epoch started from a fresh maximum.
    pub fn drawdown_constants(&self, c: f64) -> Result<DrawdownConstants> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidParameter(format!("drawdown level c = {c} must be positive")));
        }
        let (sigma, lambda, rho) = (self.params.sigma(), self.params.lambda(), self.params.rho());
        let eta = self.w_prime(c) / self.w(c);
        let delta = sigma * sigma / 2.0 * (self.w_prime(c) - self.w_second(c) / eta);
        let gamma_const = if lambda > 0.0 {
            let mut acc = 0.0;
            for i in 0..self.n_terms {
                let g = self.gammas[i];
                acc += self.coeffs[i] / (g + rho) * (g / eta - 1.0) * (g * c).exp();
            }
            lambda * acc
        } else {
            0.0
        };
        Ok(DrawdownConstants { eta, delta, gamma_const, c_used: c, measure: self.measure })
    }
}

/// Drawdown constants `(eta, Delta, Gamma)` at a fixed threshold.
///
/// `eta` is the decay rate of drawdown survival per unit of new maximum; `Delta`
/// weighs drawdown completion by creeping (diffusion touch), `Gamma` completion
/// by a jump across the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawdownConstants {
    pub eta: f64,
    pub delta: f64,
    pub gamma_const: f64,
    pub c_used: f64,
    pub measure: Measure,
}

impl DrawdownConstants {
    /// Dual-measure constants from pricing-measure ones via the closed relations
    /// `eta_P = eta - 1`, `Delta_P = (eta/(eta-1)) e^{-c} Delta`,
    /// `Gamma_P = (rho e^{-c}/(rho+1)) (eta/(eta-1)) Gamma`, where `rho` is the
    /// pricing-measure jump rate. They satisfy `Delta_P + Gamma_P = 1`.
    pub fn dual(&self, rho: f64) -> DrawdownConstants {
        assert!(self.measure == Measure::Pricing, "dual() takes pricing-measure constants");
        let lift = self.eta / (self.eta - 1.0) * (-self.c_used).exp();
        DrawdownConstants {
            eta: self.eta - 1.0,
            delta: lift * self.delta,
            gamma_const: rho / (rho + 1.0) * lift * self.gamma_const,
            c_used: self.c_used,
            measure: Measure::Dual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_params() -> ModelParams {
        ModelParams::new(0.1, 0.2, 0.2, 3.0).unwrap()
    }

    #[test]
    fn three_root_basis_at_figure_params() {
        let b = ScaleBasis::for_params(&figure_params()).unwrap();
        assert_eq!(b.n_terms(), 3);
        assert_eq!(b.gammas()[0], 1.0);
        assert!((b.gammas()[1] - -1.7056382803105437).abs() < 1e-12);
        assert!((b.gammas()[2] - -8.794361719689455).abs() < 1e-12);
        assert!((b.coeffs()[0] - 7.547169811320754).abs() < 1e-12);
        assert!((b.coeffs()[1] - -3.374332670268718).abs() < 1e-12);
        assert!((b.coeffs()[2] - -4.172837141052036).abs() < 1e-12);
    }

    #[test]
    fn two_root_basis_without_jumps() {
        let p = ModelParams::new(0.1, 0.2, 0.0, 0.0).unwrap();
        let b = ScaleBasis::for_params(&p).unwrap();
        assert_eq!(b.n_terms(), 2);
        assert_eq!(b.gammas()[0], 1.0);
        assert!((b.gammas()[1] - -5.0).abs() < 1e-12);
        assert!((b.coeffs()[0] - 1.0 / 0.12).abs() < 1e-12);
        assert!((b.coeffs()[1] - -1.0 / 0.12).abs() < 1e-12);
    }

    #[test]
    fn w_and_z_boundary_values() {
        let b = ScaleBasis::for_params(&figure_params()).unwrap();
        assert!(b.w(0.0).abs() < 1e-12);
        assert_eq!(b.w(-0.5), 0.0);
        assert!((b.w_prime(0.0) - 50.0).abs() < 1e-9); // 2/sigma^2
        assert_eq!(b.z(0.0), 1.0);
        assert_eq!(b.z(-1.0), 1.0);
        assert!(b.z(0.5) > 1.0);
        assert_eq!(b.z_prime(-0.1), 0.0);
        assert!((b.z_prime(0.3) - 0.1 * b.w(0.3)).abs() < 1e-14);
    }

    #[test]
    fn frozen_values_at_figure_threshold() {
        let b = ScaleBasis::for_params(&figure_params()).unwrap();
        let c = 1.2f64.ln();
        assert!((b.w(c) - 5.744500397106802).abs() < 1e-11);
        assert!((b.w_prime(c) - 20.65768998776521).abs() < 1e-10);
        assert!((b.w_second(c) - -63.07325082813678).abs() < 1e-10);
        assert!((b.z(c) - 1.0601670389507556).abs() < 1e-12);
        let k = b.drawdown_constants(c).unwrap();
        assert!((k.eta - 3.5960812185110798).abs() < 1e-11);
        assert!((k.delta - 0.7639426000941999).abs() < 1e-11);
        assert!((k.gamma_const - 0.1364810946980149).abs() < 1e-11);
    }

    #[test]
    fn dual_basis_shifts_exponents_and_kills_discounting() {
        let b = ScaleBasis::for_params(&figure_params()).unwrap();
        let d = b.dual();
        assert_eq!(d.measure(), Measure::Dual);
        assert_eq!(d.r_used(), 0.0);
        assert_eq!(d.gammas()[0], 0.0);
        for (g_d, g_q) in d.gammas().iter().zip(b.gammas()) {
            assert!((g_d - (g_q - 1.0)).abs() < 1e-15);
        }
        assert_eq!(d.coeffs(), b.coeffs());
        for x in [0.1, 0.5, 1.0] {
            let rel = (d.w(x) - (-x).exp() * b.w(x)) / ((-x).exp() * b.w(x));
            assert!(rel.abs() < 1e-12, "x = {x}");
            assert_eq!(d.z(x), 1.0);
        }
    }

    #[test]
    fn dual_constants_match_closed_relations() {
        let b = ScaleBasis::for_params(&figure_params()).unwrap();
        let c = 1.2f64.ln();
        let kq = b.drawdown_constants(c).unwrap();
        let via_relations = kq.dual(figure_params().rho());
        let direct = b.dual().drawdown_constants(c).unwrap();
        assert!((via_relations.eta - direct.eta).abs() < 1e-10);
        assert!((via_relations.delta - direct.delta).abs() < 1e-12);
        assert!((via_relations.gamma_const - direct.gamma_const).abs() < 1e-12);
        assert!((via_relations.delta + via_relations.gamma_const - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let b = ScaleBasis::for_params(&figure_params()).unwrap();
        assert!(b.drawdown_constants(0.0).is_err());
        assert!(b.drawdown_constants(-0.2).is_err());
    }
}
