//! Damped Newton iteration for square polynomial systems.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{rref, solve, Matrix};
use crate::scalar::{norm, Field};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Absolute residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: 1e-12, max_iter: 50, max_halvings: 30 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome<F> {
    pub x: Vec<F>,
    pub residual: f64,
    pub iterations: usize,
}

/// Condition estimate from the pivots of a row reduction.
pub fn condition_estimate<F: Field>(j: &Matrix<F>) -> f64 {
    let r = rref(j, 0.0);
    if r.rank() < j.rows().min(j.cols()) {
        return f64::INFINITY;
    }
    match r.smallest_pivot {
        Some(p) if p > 0.0 => 1.0 / p,
        _ => f64::INFINITY,
    }
}

/// Solves `f(x) = 0` from `x0` with step halving on non-decreasing residuals.
pub fn damped_newton<F: Field>(
    f: impl Fn(&[F]) -> Vec<F>,
    jac: impl Fn(&[F]) -> Matrix<F>,
    x0: Vec<F>,
    cfg: &NewtonConfig,
) -> Result<NewtonOutcome<F>> {
    let mut x = x0;
    let mut fx = f(&x);
    let mut r = norm(&fx);
    if x.is_empty() {
        return if r <= cfg.tol {
            Ok(NewtonOutcome { x, residual: r, iterations: 0 })
        } else {
            Err(Error::NewtonDivergence { residual: r, iterations: 0 })
        };
    }
    for it in 0..cfg.max_iter {
        if r <= cfg.tol {
            return Ok(NewtonOutcome { x, residual: r, iterations: it });
        }
        let j = jac(&x);
        let rhs: Vec<F> = fx.iter().map(|v| -v.clone()).collect();
        let Some(dx) = solve(&j, &rhs, 1e-14) else {
            return Err(Error::SingularJacobian { condition: condition_estimate(&j) });
        };
        let mut step = F::one();
        let half = F::from_ratio(1, 2);
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let xn: Vec<F> = x.iter().zip(&dx).map(|(a, d)| a.clone() + step.clone() * d.clone()).collect();
            let fxn = f(&xn);
            let rn = norm(&fxn);
            if rn < r || rn <= cfg.tol {
                x = xn;
                fx = fxn;
                r = rn;
                accepted = true;
                break;
            }
            step = step * half.clone();
        }
        if !accepted {
            return Err(Error::NewtonDivergence { residual: r, iterations: it + 1 });
        }
    }
    if r <= cfg.tol {
        Ok(NewtonOutcome { x, residual: r, iterations: cfg.max_iter })
    } else {
        Err(Error::NewtonDivergence { residual: r, iterations: cfg.max_iter })
    }
}
