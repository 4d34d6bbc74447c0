//! The state-dependent diffusion field and its reversibility check.
//!
//! The scalar coefficient h(x) = f((F(x) - c)^+) + 1 rescales an isotropic
//! diffusion, where f(u) = lambda * (1 - exp(-theta * u^2)) is a bounded,
//! saturating activation of the objective's excess over a threshold c. The
//! drift paired with coefficient a = h * I is b = -a grad F + beta^-1 div a,
//! which keeps exp(-beta * F) stationary; `detailed_balance_residual`
//! verifies that construction numerically on 1-D grids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{self, GridError};
use crate::objective::Objective;

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("activation excess must be nonnegative, got {0}; clamp with max(0, .) first")]
    NegativeExcess(f64),
    #[error("lambda must be finite and >= 0, got {0}")]
    InvalidLambda(f64),
    #[error("theta must be finite and >= 0, got {0}")]
    InvalidTheta(f64),
    #[error("threshold c must be finite, got {0}")]
    InvalidThreshold(f64),
    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("detailed balance check is one-dimensional, objective has dimension {0}")]
    WrongDimension(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Parameters of the activation f(u) = lambda * (1 - exp(-theta * u^2))
/// together with the threshold c it is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    pub lambda: f64,
    pub theta: f64,
    pub c: f64,
}

impl ActivationParams {
    pub fn new(lambda: f64, theta: f64, c: f64) -> Result<Self, DiffusionError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(DiffusionError::InvalidLambda(lambda));
        }
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(DiffusionError::InvalidTheta(theta));
        }
        if !c.is_finite() {
            return Err(DiffusionError::InvalidThreshold(c));
        }
        Ok(Self { lambda, theta, c })
    }

    /// lambda = theta = 0: the coefficient degenerates to 1 everywhere.
    pub fn flat() -> Self {
        Self {
            lambda: 0.0,
            theta: 0.0,
            c: 0.0,
        }
    }

    /// Same activation anchored at a different threshold.
    pub fn at_threshold(&self, c: f64) -> Self {
        Self { c, ..*self }
    }

    /// Supremum of f' over u >= 0, attained at u = 1/sqrt(2 theta):
    /// lambda * sqrt(2 theta) * exp(-1/2).
    pub fn derivative_bound(&self) -> f64 {
        self.lambda * (2.0 * self.theta).sqrt() * (-0.5f64).exp()
    }
}

/// f(u) = lambda * (1 - exp(-theta * u^2)) for u >= 0; in [0, lambda).
pub fn activation(p: &ActivationParams, u: f64) -> Result<f64, DiffusionError> {
    if u < 0.0 || u.is_nan() {
        return Err(DiffusionError::NegativeExcess(u));
    }
    Ok(activation_raw(p, u))
}

#[inline]
fn activation_raw(p: &ActivationParams, u: f64) -> f64 {
    p.lambda * (1.0 - (-p.theta * u * u).exp())
}

/// f'(u) = 2 * lambda * theta * u * exp(-theta * u^2) for u >= 0.
pub fn activation_derivative(p: &ActivationParams, u: f64) -> Result<f64, DiffusionError> {
    if u < 0.0 || u.is_nan() {
        return Err(DiffusionError::NegativeExcess(u));
    }
    Ok(activation_derivative_raw(p, u))
}

#[inline]
fn activation_derivative_raw(p: &ActivationParams, u: f64) -> f64 {
    2.0 * p.lambda * p.theta * u * (-p.theta * u * u).exp()
}

/// h(x) = f((F(x) - c)^+) + 1; the scalar multiplying the identity in the
/// diffusion coefficient. Always in [1, lambda + 1].
#[inline]
pub fn scalar_coefficient(p: &ActivationParams, fval: f64) -> f64 {
    activation_raw(p, (fval - p.c).max(0.0)) + 1.0
}

/// f((F(x) - c)^+) without the +1 floor; the noise boost used by the
/// landscape modification.
#[inline]
pub fn excess_activation(p: &ActivationParams, fval: f64) -> f64 {
    activation_raw(p, (fval - p.c).max(0.0))
}

/// Scalar s with grad h = s * grad F, namely f'((F(x) - c)^+); zero at and
/// below the threshold, so h is C^1 across it.
#[inline]
pub fn coefficient_gradient_factor(p: &ActivationParams, fval: f64) -> f64 {
    activation_derivative_raw(p, (fval - p.c).max(0.0))
}

/// grad h = f'((F(x) - c)^+) * grad F.
pub fn coefficient_gradient(p: &ActivationParams, fval: f64, grad_f: &[f64]) -> Vec<f64> {
    let s = coefficient_gradient_factor(p, fval);
    grad_f.iter().map(|&g| s * g).collect()
}

/// Stationarity-preserving drift b = -h grad F + beta^-1 grad h.
pub fn drift(
    p: &ActivationParams,
    beta: f64,
    fval: f64,
    grad_f: &[f64],
) -> Result<Vec<f64>, DiffusionError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(DiffusionError::InvalidBeta(beta));
    }
    let h = scalar_coefficient(p, fval);
    let s = coefficient_gradient_factor(p, fval);
    let beta_inv = 1.0 / beta;
    Ok(grad_f
        .iter()
        .map(|&g| -(h * g) + beta_inv * (s * g))
        .collect())
}

/// Everything a sampler step needs at one point, bundled.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionCoefficients {
    pub h: f64,
    pub grad_h: Vec<f64>,
    pub drift: Vec<f64>,
    pub noise_scale: f64,
}

impl DiffusionCoefficients {
    pub fn at(
        p: &ActivationParams,
        beta: f64,
        eta: f64,
        fval: f64,
        grad_f: &[f64],
    ) -> Result<Self, DiffusionError> {
        let drift = drift(p, beta, fval, grad_f)?;
        let h = scalar_coefficient(p, fval);
        Ok(Self {
            h,
            grad_h: coefficient_gradient(p, fval, grad_f),
            drift,
            noise_scale: (2.0 * eta / beta * h).sqrt(),
        })
    }
}

/// Pointwise residual of the stationarity identity on a uniform grid:
/// r(x) = b(x) nu(x) - beta^-1 d/dx [a(x) nu(x)], which is identically zero
/// for the exact density nu = exp(-beta F)/Z. Central differences make the
/// returned values O(spacing^2) wherever the coefficient is smooth.
pub fn detailed_balance_residual(
    p: &ActivationParams,
    f: &dyn Objective,
    beta: f64,
    grid_points: &[f64],
) -> Result<Vec<f64>, DiffusionError> {
    Ok(detailed_balance_report(p, f, beta, grid_points)?.residual)
}

/// Residual plus the sup norms needed to judge it in relative terms.
#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub residual: Vec<f64>,
    pub sup_residual: f64,
    /// Sup of |b(x) nu(x)|, the natural scale of the two balanced terms.
    pub sup_drift_density: f64,
}

impl BalanceReport {
    pub fn relative_sup(&self) -> f64 {
        self.sup_residual / self.sup_drift_density
    }
}

pub fn detailed_balance_report(
    p: &ActivationParams,
    f: &dyn Objective,
    beta: f64,
    grid_points: &[f64],
) -> Result<BalanceReport, DiffusionError> {
    if f.dimension() != 1 {
        return Err(DiffusionError::WrongDimension(f.dimension()));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(DiffusionError::InvalidBeta(beta));
    }
    let spacing = grid::validate_uniform(grid_points)?;
    let n = grid_points.len();

    let fvals: Vec<f64> = grid_points.iter().map(|&x| f.eval(&[x])).collect();
    let fmin = fvals.iter().cloned().fold(f64::INFINITY, f64::min);
    // Shift by the grid minimum before exponentiating; the shift cancels in
    // the normalized density and avoids overflow at large beta.
    let weights: Vec<f64> = fvals.iter().map(|&v| (-beta * (v - fmin)).exp()).collect();
    grid::check_boundary_negligible(&weights)?;
    let z = grid::trapezoid(&weights, spacing);
    let nu: Vec<f64> = weights.iter().map(|&w| w / z).collect();

    let mut gbuf = [0.0f64];
    let mut drift_density = Vec::with_capacity(n);
    let mut coeff_density = Vec::with_capacity(n);
    for i in 0..n {
        f.grad(&grid_points[i..=i], &mut gbuf);
        let h = scalar_coefficient(p, fvals[i]);
        let s = coefficient_gradient_factor(p, fvals[i]);
        let b = -(h * gbuf[0]) + (s * gbuf[0]) / beta;
        drift_density.push(b * nu[i]);
        coeff_density.push(h * nu[i]);
    }

    let beta_inv = 1.0 / beta;
    let two_d = 2.0 * spacing;
    let mut residual = Vec::with_capacity(n);
    for i in 0..n {
        // Second-order one-sided stencils keep the endpoints from polluting
        // the convergence order.
        let d = if i == 0 {
            (-3.0 * coeff_density[0] + 4.0 * coeff_density[1] - coeff_density[2]) / two_d
        } else if i == n - 1 {
            (3.0 * coeff_density[n - 1] - 4.0 * coeff_density[n - 2] + coeff_density[n - 3])
                / two_d
        } else {
            (coeff_density[i + 1] - coeff_density[i - 1]) / two_d
        };
        residual.push(drift_density[i] - beta_inv * d);
    }

    let sup_residual = residual.iter().fold(0.0f64, |m, &r| m.max(r.abs()));
    let sup_drift_density = drift_density.iter().fold(0.0f64, |m, &b| m.max(b.abs()));
    Ok(BalanceReport {
        residual,
        sup_residual,
        sup_drift_density,
    })
}
