//! The nonlinear elliptic constraint `-phi'' + e^phi - 1 = n`.
//!
//! The default solver iterates the contraction
//! `phi <- (-d^2 + 1)^{-1} (n - (q(phi) - phi))` entirely in Fourier space.
//! A Newton solve built on [`helmholtz_inverse_v`] serves as an independent
//! cross-check and fallback.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::constitutive::big_q;
use crate::grid::Field;
use crate::resolvent::{helmholtz_inverse_v, ResolventError, MAX_POTENTIAL};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200;
/// `||n||_{L^2}` above which data is flagged as outside the small-data regime.
pub const SMALL_DATA: f64 = 0.1;
/// Inner tolerance of the linear solves used by Newton and by [`dphi_dt`].
pub const LINEAR_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoissonError {
    #[error("fixed-point iteration did not converge after {iterations} iterations (last H2 increment {increment:e})")]
    NotConverged { iterations: usize, increment: f64 },
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("non-finite value in the potential solve")]
    NonFinite,
    #[error("linearization rejected: ||e^phi - 1||_inf = {0} exceeds 1/2")]
    Linearization(f64),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
}

#[derive(Debug, Clone)]
pub struct PotentialSolve {
    pub phi: Field,
    pub iterations: usize,
    /// `||-phi'' + q(phi) - n||_{L^2}`.
    pub residual: f64,
    /// `||phi||_{H^2} / ||n||_{L^2}`; `None` for `n = 0`.
    pub ratio: Option<f64>,
    /// `H^2` size of every update, in order.
    pub increments: Vec<f64>,
}

impl PotentialSolve {
    /// Ratios of successive increments, starting from the second update.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.increments
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Summary of a solve for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub ratio: Option<f64>,
}

impl From<&PotentialSolve> for SolveStats {
    fn from(s: &PotentialSolve) -> Self {
        Self {
            iterations: s.iterations,
            residual: s.residual,
            ratio: s.ratio,
        }
    }
}

pub fn in_small_data_regime(n: &Field) -> bool {
    n.l2() <= SMALL_DATA
}

/// `-phi'' + q(phi) - n`.
pub fn equation_residual(phi: &Field, n: &Field) -> Field {
    let lap = phi.derivative(2);
    let mut out = Field::zeros(phi.grid());
    for (j, o) in out.values_mut().iter_mut().enumerate() {
        *o = -lap.values()[j] + phi.values()[j].exp_m1() - n.values()[j];
    }
    out
}

fn finish(phi: Field, n: &Field, iterations: usize, increments: Vec<f64>) -> PotentialSolve {
    let residual = equation_residual(&phi, n).l2();
    let n_norm = n.l2();
    let ratio = (n_norm > 0.0).then(|| phi.h2() / n_norm);
    PotentialSolve {
        phi,
        iterations,
        residual,
        ratio,
        increments,
    }
}

/// Contraction iteration from `phi = 0`.
pub fn solve_phi_fixedpoint(n: &Field, tol: f64, max_iter: usize) -> Result<PotentialSolve, PoissonError> {
    solve_phi_fixedpoint_from(n, None, tol, max_iter)
}

/// Contraction iteration from an optional initial guess. Stops once the
/// `H^2` norm of an update is at most `tol`.
pub fn solve_phi_fixedpoint_from(
    n: &Field,
    guess: Option<&Field>,
    tol: f64,
    max_iter: usize,
) -> Result<PotentialSolve, PoissonError> {
    if !n.is_finite() {
        return Err(PoissonError::NonFinite);
    }
    let grid = n.grid();
    let symbol: Vec<f64> = grid.wavenumbers().iter().map(|xi| 1.0 / (1.0 + xi * xi)).collect();
    let mut phi = match guess {
        Some(g) => g.values().to_vec(),
        None => vec![0.0; grid.points()],
    };
    let mut spec_old: Option<Vec<Complex64>> = guess.map(|g| grid.forward(g.values()));
    let mut increments = Vec::new();
    let mut source = vec![0.0; grid.points()];

    for iteration in 1..=max_iter {
        for ((s, &nj), &pj) in source.iter_mut().zip(n.values()).zip(&phi) {
            *s = nj - big_q(pj);
        }
        let mut spec = grid.forward(&source);
        for (c, m) in spec.iter_mut().zip(&symbol) {
            *c *= m;
        }
        let increment = match &spec_old {
            Some(old) => {
                let diff: Vec<Complex64> = spec.iter().zip(old).map(|(a, b)| a - b).collect();
                grid.spectral_l2_sq(&diff, |j, xi| grid.h2_weight(j, xi)).sqrt()
            }
            None => grid.spectral_l2_sq(&spec, |j, xi| grid.h2_weight(j, xi)).sqrt(),
        };
        if !increment.is_finite() {
            return Err(PoissonError::NonFinite);
        }
        increments.push(increment);
        phi = grid.inverse(spec.clone());
        spec_old = Some(spec);
        if increment <= tol {
            return Ok(finish(Field::new(grid, phi), n, iteration, increments));
        }
    }
    Err(PoissonError::NotConverged {
        iterations: max_iter,
        increment: increments.last().copied().unwrap_or(f64::NAN),
    })
}

/// Newton iteration from `phi = (-d^2 + 1)^{-1} n`. Stops when the `H^2`
/// update or the `L^2` residual falls to `tol`.
pub fn solve_phi_newton(n: &Field, tol: f64) -> Result<PotentialSolve, PoissonError> {
    if !n.is_finite() {
        return Err(PoissonError::NonFinite);
    }
    let mut phi = n.helmholtz_inverse();
    let mut increments = Vec::new();
    let mut residual = equation_residual(&phi, n);
    for iteration in 1..=NEWTON_MAX_ITER {
        let res_norm = residual.l2();
        if !res_norm.is_finite() {
            return Err(PoissonError::NonFinite);
        }
        if res_norm <= tol {
            return Ok(finish(phi, n, iteration - 1, increments));
        }
        let v = phi.map(f64::exp_m1);
        let vmax = v.max_abs();
        if vmax > MAX_POTENTIAL {
            return Err(PoissonError::Linearization(vmax));
        }
        let step = helmholtz_inverse_v(&(-&residual), &v, LINEAR_TOL)?.solution;
        let increment = step.h2();
        increments.push(increment);
        phi = &phi + &step;
        residual = equation_residual(&phi, n);
        if increment <= tol {
            return Ok(finish(phi, n, iteration, increments));
        }
        if iteration >= 3 && increment > increments[iteration - 2] {
            return Err(PoissonError::Diverged {
                iterations: iteration,
                residual: residual.l2(),
            });
        }
    }
    Err(PoissonError::Diverged {
        iterations: NEWTON_MAX_ITER,
        residual: residual.l2(),
    })
}

/// Time derivative of the potential along the flow:
/// `phi_t = -(-d^2 + e^phi)^{-1} ((1 + n) u)_x`.
pub fn dphi_dt(n: &Field, u: &Field, phi: &Field) -> Result<Field, PoissonError> {
    let flux = n.zip_map(u, |a, b| (1.0 + a) * b).derivative(1);
    let v = phi.map(f64::exp_m1);
    let solve = helmholtz_inverse_v(&flux, &v, LINEAR_TOL)?;
    Ok(-&solve.solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn sech2(x: f64) -> f64 {
        1.0 / x.cosh().powi(2)
    }

    #[test]
    fn zero_density_gives_zero_potential() {
        let g = Grid::new(40.0, 256).unwrap();
        let n = Field::zeros(&g);
        let s = solve_phi_fixedpoint(&n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(s.phi.is_zero());
        assert_eq!(s.iterations, 1);
        assert_eq!(s.ratio, None);
        let s = solve_phi_newton(&n, DEFAULT_TOL).unwrap();
        assert!(s.phi.is_zero());
    }

    #[test]
    fn fixed_point_matches_newton() {
        let g = Grid::new(60.0, 512).unwrap();
        let n = Field::from_fn(&g, |x| 0.01 * sech2(x / 2.0));
        let a = solve_phi_fixedpoint(&n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let b = solve_phi_newton(&n, DEFAULT_TOL).unwrap();
        assert!((&a.phi - &b.phi).max_abs() <= 1e-11);
        assert!(a.residual <= 1e-11);
    }

    #[test]
    fn contraction_factor_is_small() {
        let g = Grid::new(60.0, 512).unwrap();
        let profile = Field::from_fn(&g, |x| (-x * x / 4.0).exp());
        let n = profile.scale(0.05 / profile.l2());
        let s = solve_phi_fixedpoint(&n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let factors = s.contraction_factors();
        assert!(!factors.is_empty());
        assert!(factors.iter().all(|&f| f <= 0.5), "{factors:?}");
    }

    #[test]
    fn newton_linear_regime() {
        let g = Grid::new(20.0, 128).unwrap();
        let xi = 3.0 * 2.0 * PI / g.length();
        let n = Field::from_fn(&g, |x| 1e-4 * (xi * x).cos());
        let s = solve_phi_newton(&n, DEFAULT_TOL).unwrap();
        let linear = Field::from_fn(&g, |x| 1e-4 * (xi * x).cos() / (1.0 + xi * xi));
        assert!((&s.phi - &linear).max_abs() <= 1e-8);
    }

    #[test]
    fn warm_start_converges_faster() {
        let g = Grid::new(60.0, 512).unwrap();
        let n = Field::from_fn(&g, |x| 0.05 * sech2(x / 3.0));
        let cold = solve_phi_fixedpoint(&n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let warm = solve_phi_fixedpoint_from(&n, Some(&cold.phi), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(warm.iterations < cold.iterations);
        assert!((&warm.phi - &cold.phi).max_abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = Grid::new(40.0, 256).unwrap();
        let n = Field::from_fn(&g, |x| 0.3 * sech2(x));
        assert!(matches!(
            solve_phi_fixedpoint(&n, 1e-13, 2),
            Err(PoissonError::NotConverged { iterations: 2, .. })
        ));
        let mut bad = n.clone();
        bad.values_mut()[3] = f64::NAN;
        assert_eq!(solve_phi_fixedpoint(&bad, 1e-12, 10).unwrap_err(), PoissonError::NonFinite);
    }

    #[test]
    fn newton_rejects_large_linearization() {
        let g = Grid::new(40.0, 256).unwrap();
        let n = Field::from_fn(&g, |x| 3.0 * sech2(x));
        assert!(matches!(solve_phi_newton(&n, 1e-12), Err(PoissonError::Linearization(_))));
    }

    #[test]
    fn dphi_dt_vanishes_without_velocity() {
        let g = Grid::new(40.0, 256).unwrap();
        let n = Field::from_fn(&g, |x| 0.02 * sech2(x));
        let phi = solve_phi_fixedpoint(&n, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().phi;
        assert!(dphi_dt(&n, &Field::zeros(&g), &phi).unwrap().is_zero());
    }

    #[test]
    fn dphi_dt_symbol_at_rest() {
        let g = Grid::new(30.0, 128).unwrap();
        let n = Field::zeros(&g);
        let u = Field::from_fn(&g, |x| (-(x * x) / 2.0).exp() * (1.0 + 0.3 * x));
        let out = dphi_dt(&n, &u, &Field::zeros(&g)).unwrap();
        // Symbol of -(-d^2 + 1)^{-1} d on each mode: -i xi / (1 + xi^2).
        let nyq = g.nyquist();
        let oracle = u.apply_symbol(|j, xi| {
            if j == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -xi / (1.0 + xi * xi))
            }
        });
        assert!((&out - &oracle).max_abs() < 1e-14);
    }
}
