//! Variable-coefficient Helmholtz solves `(-d^2 + 1 + V) g = f`.
//!
//! The solve is a Neumann (Richardson) iteration preconditioned by the exact
//! constant-coefficient inverse: `g <- (-d^2 + 1)^{-1} (f - V g)`. It
//! contracts in `L^2` with factor `||V||_inf`, so potentials are limited to
//! `||V||_inf <= 1/2`.

use crate::grid::Field;

pub const MAX_POTENTIAL: f64 = 0.5;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResolventError {
    #[error("potential too large for the Neumann solve: ||V||_inf = {0} > 1/2")]
    PotentialTooLarge(f64),
    #[error("variable Helmholtz solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-finite input to the variable Helmholtz solve")]
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct VariableSolve {
    pub solution: Field,
    pub iterations: usize,
    /// `||f - (-g'' + (1 + V) g)|| / ||f||` at exit.
    pub residual: f64,
}

/// Solves `-g'' + (1 + V) g = f` to relative `L^2` residual `tol`.
pub fn helmholtz_inverse_v(f: &Field, v: &Field, tol: f64) -> Result<VariableSolve, ResolventError> {
    if !f.is_finite() || !v.is_finite() {
        return Err(ResolventError::NonFinite);
    }
    let vmax = v.max_abs();
    if vmax > MAX_POTENTIAL {
        return Err(ResolventError::PotentialTooLarge(vmax));
    }
    let f_norm = f.l2();
    if f_norm == 0.0 {
        return Ok(VariableSolve {
            solution: Field::zeros(f.grid()),
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut g = f.helmholtz_inverse();
    // For the first iterate the residual is -V g exactly.
    let mut residual = (v * &g).l2() / f_norm;
    let mut iterations = 1;
    while residual > tol {
        if iterations >= MAX_ITERATIONS {
            return Err(ResolventError::NotConverged {
                iterations,
                residual,
            });
        }
        let next = f.zip_map(&(v * &g), |a, b| a - b).helmholtz_inverse();
        // (-d^2 + 1) next = f - V g, so the residual of `next` is V (g - next).
        residual = v
            .zip_map(&(&g - &next), |vv, d| vv * d)
            .l2()
            / f_norm;
        g = next;
        iterations += 1;
        if !residual.is_finite() {
            return Err(ResolventError::NonFinite);
        }
    }
    Ok(VariableSolve {
        solution: g,
        iterations,
        residual,
    })
}

/// Direct evaluation of `-g'' + (1 + V) g - f` for residual checks.
pub fn residual_field(g: &Field, v: &Field, f: &Field) -> Field {
    let lap = g.derivative(2);
    let mut out = Field::zeros(g.grid());
    for (j, o) in out.values_mut().iter_mut().enumerate() {
        *o = -lap.values()[j] + (1.0 + v.values()[j]) * g.values()[j] - f.values()[j];
    }
    out
}
