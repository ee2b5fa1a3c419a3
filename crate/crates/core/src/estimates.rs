//! Randomized checks of the weighted resolvent bounds and the elliptic
//! solver, with fitted constants.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::grid::{Field, Grid, GridError};
use crate::poisson::{self, PoissonError};
use crate::resolvent::{self, ResolventError};
use crate::weight::{WeightError, WeightFamily};

/// Weight scales drawn by the resolvent suite.
pub const SCALES: [f64; 3] = [10.0, 20.0, 50.0];
/// Largest `||V||_inf` drawn; strictly inside the admissible ball.
pub const MAX_DRAWN_POTENTIAL: f64 = 0.49;
/// Cosh-weighted norms stay this many weight scales away from the seam.
pub const SEAM_SCALES: f64 = 5.0;
pub const POSITIVITY_SLACK: f64 = 1e-12;
pub const MAX_DENSITY_L2: f64 = 0.1;
pub const SOLVE_TOL: f64 = 1e-13;

#[derive(Debug, thiserror::Error)]
pub enum EstimateError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
}

/// Measurements for one random `(V, u, A)` draw.
#[derive(Debug, Clone, Serialize)]
pub struct ResolventSample {
    pub scale: f64,
    pub potential_sup: f64,
    /// `||sech (H+V)^{-1} u||`.
    pub commuted_norm: f64,
    /// `||(H+V)^{-1} sech u||`.
    pub weighted_norm: f64,
    /// `1 + 10/A`.
    pub bound_factor: f64,
    pub commutator_holds: bool,
    /// `sum_{j,k} ||sech d^j (H+V)^{-1} d^k f|| / ||sech f||`.
    pub derivative_ratio: f64,
    /// `||cosh H^{-1} sech f||_{|x| <= L/2 - 5A} / ||f||`.
    pub conjugated_ratio: f64,
    /// `int phi_A' u H^{-1} u / ||u||^2`.
    pub positivity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventReport {
    pub seed: u64,
    pub samples: usize,
    pub commutator_passes: usize,
    /// `max commuted / ((1 + 10/A) weighted)`; at most 1 when every sample passes.
    pub worst_commutator_ratio: f64,
    pub derivative_constant: f64,
    pub conjugated_constant: f64,
    pub positivity_passes: usize,
    pub worst_positivity: f64,
    pub draws: Vec<ResolventSample>,
}

impl ResolventReport {
    pub fn commutator_ok(&self) -> bool {
        self.commutator_passes == self.samples
    }

    pub fn positivity_ok(&self) -> bool {
        self.positivity_passes == self.samples
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonSample {
    pub density_l2: f64,
    pub potential_h2: f64,
    pub ratio: f64,
    /// `||phi_fixed_point - phi_newton||_{H^2}`.
    pub disagreement: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonReport {
    pub seed: u64,
    pub samples: usize,
    pub max_disagreement: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub draws: Vec<PoissonSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub resolvent: ResolventReport,
    pub poisson: PoissonReport,
}

/// Sum of randomly placed, modulated Gaussian bumps.
fn random_bumps(rng: &mut ChaCha8Rng, grid: &Grid, spread: f64) -> Field {
    let count = rng.gen_range(1..=4);
    let bumps: Vec<(f64, f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.gen_range(-spread..=spread),
                rng.gen_range(0.5..4.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|&(c, w, a, kappa, theta)| {
                let z = grid.wrap(x - c);
                a * (-(z / w).powi(2)).exp() * (kappa * z + theta).cos()
            })
            .sum()
    })
}

fn random_potential(rng: &mut ChaCha8Rng, grid: &Grid, spread: f64) -> Field {
    let v = random_bumps(rng, grid, spread);
    let target = rng.gen_range(0.05..MAX_DRAWN_POTENTIAL);
    let peak = v.max_abs();
    if peak == 0.0 {
        v
    } else {
        v.scale(target / peak)
    }
}

/// Periodic grid of length `20 A` with spacing near 0.2.
fn resolvent_grid(scale: f64) -> Result<Grid, GridError> {
    let length = 20.0 * scale;
    let points = (length / 0.2).log2().ceil().exp2() as usize;
    Grid::new(length, points.max(1024))
}

fn inverse_v(f: &Field, v: &Field) -> Result<Field, ResolventError> {
    Ok(resolvent::helmholtz_inverse_v(f, v, SOLVE_TOL)?.solution)
}

fn resolvent_draw(rng: &mut ChaCha8Rng) -> Result<ResolventSample, EstimateError> {
    let scale = *SCALES.choose(rng).expect("nonempty scale list");
    let grid = resolvent_grid(scale)?;
    let spread = 0.25 * grid.length();
    let weight = WeightFamily::new(scale, 0.0)?;
    let sech = weight.sech(&grid);
    let v = random_potential(rng, &grid, spread);
    let u = random_bumps(rng, &grid, spread);
    let f = random_bumps(rng, &grid, spread);

    let commuted_norm = (&sech * &inverse_v(&u, &v)?).l2();
    let weighted_norm = inverse_v(&(&sech * &u), &v)?.l2();
    let bound_factor = 1.0 + 10.0 / scale;

    let sech_f = (&sech * &f).l2();
    let mut derivative_sum = 0.0;
    for k in 0..2 {
        let source = if k == 0 { f.clone() } else { f.derivative(1) };
        let g = inverse_v(&source, &v)?;
        for j in 0..2 {
            let g = if j == 0 { g.clone() } else { g.derivative(1) };
            derivative_sum += (&sech * &g).l2();
        }
    }

    let cosh = weight.cosh(&grid);
    let reach = 0.5 * grid.length() - SEAM_SCALES * scale;
    let conjugated = (&cosh * &(&sech * &f).helmholtz_inverse()).map_with_x(|x, y| if x.abs() <= reach { y } else { 0.0 });

    let u_sq = u.inner(&u);
    let positivity = weight.eval(&grid, 1).inner(&(&u * &u.helmholtz_inverse())) / u_sq;

    Ok(ResolventSample {
        scale,
        potential_sup: v.max_abs(),
        commuted_norm,
        weighted_norm,
        bound_factor,
        commutator_holds: commuted_norm <= bound_factor * weighted_norm,
        derivative_ratio: derivative_sum / sech_f,
        conjugated_ratio: conjugated.l2() / f.l2(),
        positivity,
    })
}

/// Draws `samples` random `(V, u, f, A)` and measures the weighted resolvent bounds.
pub fn resolvent_suite(samples: usize, seed: u64) -> Result<ResolventReport, EstimateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..samples)
        .map(|_| resolvent_draw(&mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResolventReport {
        seed,
        samples,
        commutator_passes: draws.iter().filter(|d| d.commutator_holds).count(),
        worst_commutator_ratio: draws
            .iter()
            .map(|d| d.commuted_norm / (d.bound_factor * d.weighted_norm))
            .fold(0.0, f64::max),
        derivative_constant: draws.iter().map(|d| d.derivative_ratio).fold(0.0, f64::max),
        conjugated_constant: draws.iter().map(|d| d.conjugated_ratio).fold(0.0, f64::max),
        positivity_passes: draws.iter().filter(|d| d.positivity >= -POSITIVITY_SLACK).count(),
        worst_positivity: draws.iter().map(|d| d.positivity).fold(f64::INFINITY, f64::min),
        draws,
    })
}

/// Draws `samples` random densities with `||n||_{L^2} <= 0.1` and compares the
/// contraction and Newton solutions.
pub fn poisson_suite(samples: usize, seed: u64) -> Result<PoissonReport, EstimateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::new(80.0, 1024)?;
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let shape = random_bumps(&mut rng, &grid, 20.0);
        let target = rng.gen_range(0.01..=MAX_DENSITY_L2);
        let n = shape.scale(target / shape.l2());
        let fixed = poisson::solve_phi_fixedpoint(&n, SOLVE_TOL, poisson::DEFAULT_MAX_ITER)?;
        let newton = poisson::solve_phi_newton(&n, SOLVE_TOL)?;
        let potential_h2 = fixed.phi.h2();
        draws.push(PoissonSample {
            density_l2: n.l2(),
            potential_h2,
            ratio: potential_h2 / n.l2(),
            disagreement: (&fixed.phi - &newton.phi).h2(),
            iterations: fixed.iterations,
        });
    }
    Ok(PoissonReport {
        seed,
        samples,
        max_disagreement: draws.iter().map(|d| d.disagreement).fold(0.0, f64::max),
        min_ratio: draws.iter().map(|d| d.ratio).fold(f64::INFINITY, f64::min),
        max_ratio: draws.iter().map(|d| d.ratio).fold(0.0, f64::max),
        draws,
    })
}

pub fn run(samples: usize, seed: u64) -> Result<EstimateReport, EstimateError> {
    Ok(EstimateReport {
        resolvent: resolvent_suite(samples, seed)?,
        poisson: poisson_suite(samples, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_cover_twenty_scales() {
        for a in SCALES {
            let g = resolvent_grid(a).unwrap();
            assert_eq!(g.length(), 20.0 * a);
            assert!(g.dx() <= 0.25);
        }
    }

    #[test]
    fn potentials_stay_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::new(200.0, 1024).unwrap();
        for _ in 0..20 {
            let v = random_potential(&mut rng, &g, 50.0);
            assert!(v.max_abs() < resolvent::MAX_POTENTIAL);
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = poisson_suite(3, 11).unwrap();
        let b = poisson_suite(3, 11).unwrap();
        assert_eq!(a.max_disagreement.to_bits(), b.max_disagreement.to_bits());
        assert_eq!(a.min_ratio.to_bits(), b.min_ratio.to_bits());
    }
}
