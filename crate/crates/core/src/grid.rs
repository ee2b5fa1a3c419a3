//! Periodic grid and sampled real fields.
//!
//! The whole line is represented by a torus of length `length` sampled at
//! `points` equispaced nodes `x_j = -length/2 + j*dx`. Every operator that
//! acts on a [`Field`] works on the discrete Fourier coefficients, so
//! differentiation and constant-coefficient inverses are exact on the
//! resolved modes.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid point count must be a power of two and at least 16, got {0}")]
    PointCount(usize),
    #[error("grid length must be positive and finite, got {0}")]
    Length(f64),
}

struct GridInner {
    length: f64,
    points: usize,
    dx: f64,
    /// Angular wavenumber of each FFT bin. The Nyquist bin carries +N/2.
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// A uniform periodic grid together with its FFT plans.
///
/// Cloning is cheap; clones share the plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

thread_local! {
    static FFT_SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

impl Grid {
    pub fn new(length: f64, points: usize) -> Result<Self, GridError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::Length(length));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(GridError::PointCount(points));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let k0 = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..points)
            .map(|j| {
                let m = if j <= points / 2 {
                    j as f64
                } else {
                    j as f64 - points as f64
                };
                m * k0
            })
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                length,
                points,
                dx: length / points as f64,
                wavenumbers,
                forward,
                inverse,
            }),
        })
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn points(&self) -> usize {
        self.inner.points
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.inner.length + j as f64 * self.inner.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points()).map(|j| self.node(j)).collect()
    }

    /// Index of the node at `x = 0`.
    pub fn center_index(&self) -> usize {
        self.points() / 2
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Index of the Nyquist bin.
    pub fn nyquist(&self) -> usize {
        self.points() / 2
    }

    /// Largest resolved angular wavenumber, `pi/dx`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    /// Wraps a displacement onto `[-length/2, length/2)`.
    pub fn wrap(&self, z: f64) -> f64 {
        let half = 0.5 * self.length();
        (z + half).rem_euclid(self.length()) - half
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.process(&self.inner.forward, &mut buf);
        buf
    }

    pub(crate) fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.process(&self.inner.inverse, &mut spectrum);
        let scale = 1.0 / self.points() as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    fn process(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        FFT_SCRATCH.with(|cell| {
            let mut scratch = cell.borrow_mut();
            let need = plan.get_inplace_scratch_len();
            if scratch.len() < need {
                scratch.resize(need, Complex64::new(0.0, 0.0));
            }
            plan.process_with_scratch(buf, &mut scratch[..need]);
        });
    }

    /// Rectangle-rule `L^2` norm squared of a spectrum produced by
    /// [`Grid::forward`] (Parseval).
    pub(crate) fn spectral_l2_sq(&self, spectrum: &[Complex64], weight: impl Fn(usize, f64) -> f64) -> f64 {
        let n = self.points() as f64;
        spectrum
            .iter()
            .zip(self.wavenumbers())
            .enumerate()
            .map(|(j, (c, &xi))| c.norm_sqr() * weight(j, xi))
            .sum::<f64>()
            * self.dx()
            / n
    }

    /// `H^2` weight `1 + xi^2 + xi^4`, with the Nyquist bin excluded from the
    /// first-derivative part as in [`Field::derivative`].
    pub(crate) fn h2_weight(&self, j: usize, xi: f64) -> f64 {
        let xi2 = xi * xi;
        let first = if j == self.nyquist() { 0.0 } else { xi2 };
        1.0 + first + xi2 * xi2
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.length() == other.length() && self.points() == other.points())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("length", &self.length())
            .field("points", &self.points())
            .field("dx", &self.dx())
            .finish()
    }
}

/// Rectangle-rule and Sobolev norms of a field.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
    pub h2: f64,
}

/// A real function sampled on a [`Grid`].
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("points", &self.values.len())
            .field("linf", &self.max_abs())
            .finish()
    }
}

impl Field {
    /// Panics if `values.len()` differs from the grid size.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.points(), "field size does not match grid");
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::new(grid, vec![value; grid.points()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid, (0..grid.points()).map(|j| f(grid.node(j))).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert!(self.grid == other.grid);
        Field::new(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Applies `f(x_j, value_j)` nodewise.
    pub fn map_with_x(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        Field::new(
            &self.grid,
            self.values
                .iter()
                .enumerate()
                .map(|(j, &v)| f(self.grid.node(j), v))
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Field {
        self.map(|v| factor * v)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rectangle-rule integral over one period.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Rectangle-rule `L^2` inner product.
    pub fn inner(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.dx()
    }

    pub fn l2(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `L^2`, max, `H^1` and `H^2` norms; the Sobolev parts are summed over
    /// spectral derivatives.
    pub fn norms(&self) -> Norms {
        let spec = self.grid.forward(&self.values);
        let l2_sq = self.grid.spectral_l2_sq(&spec, |_, _| 1.0);
        let nyq = self.grid.nyquist();
        let d1_sq = self
            .grid
            .spectral_l2_sq(&spec, |j, xi| if j == nyq { 0.0 } else { xi * xi });
        let d2_sq = self.grid.spectral_l2_sq(&spec, |_, xi| xi.powi(4));
        Norms {
            l2: self.l2(),
            linf: self.max_abs(),
            h1: (l2_sq + d1_sq).sqrt(),
            h2: (l2_sq + d1_sq + d2_sq).sqrt(),
        }
    }

    pub fn h2(&self) -> f64 {
        let spec = self.grid.forward(&self.values);
        self.grid
            .spectral_l2_sq(&spec, |j, xi| self.grid.h2_weight(j, xi))
            .sqrt()
    }

    /// Multiplies the Fourier coefficients by `symbol(bin, xi)`.
    ///
    /// The symbol must be Hermitian (`symbol(-xi) = conj(symbol(xi))`) for the
    /// result to be real; the imaginary residue is discarded.
    pub fn apply_symbol(&self, symbol: impl Fn(usize, f64) -> Complex64) -> Field {
        let mut spec = self.grid.forward(&self.values);
        for (j, (c, &xi)) in spec.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            *c *= symbol(j, xi);
        }
        Field::new(&self.grid, self.grid.inverse(spec))
    }

    /// Spectral derivative of order 1, 2 or 3. Odd orders drop the Nyquist
    /// bin.
    pub fn derivative(&self, order: u32) -> Field {
        assert!((1..=3).contains(&order), "derivative order must be 1, 2 or 3");
        let nyq = self.grid.nyquist();
        self.apply_symbol(|j, xi| {
            if order % 2 == 1 && j == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi).powu(order)
            }
        })
    }

    /// Solves `-g'' + g = self` on the torus.
    pub fn helmholtz_inverse(&self) -> Field {
        self.apply_symbol(|_, xi| Complex64::new(1.0 / (1.0 + xi * xi), 0.0))
    }

    /// Translates the field by `distance`: returns `f(x - distance)`.
    pub fn shifted(&self, distance: f64) -> Field {
        let nyq = self.grid.nyquist();
        self.apply_symbol(|j, xi| {
            if j == nyq {
                Complex64::new((xi * distance).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -xi * distance)
            }
        })
    }
}

impl<'a> Add<&'a Field> for &'a Field {
    type Output = Field;
    fn add(self, rhs: &'a Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Field> for &'a Field {
    type Output = Field;
    fn sub(self, rhs: &'a Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Field> for &'a Field {
    type Output = Field;
    fn mul(self, rhs: &'a Field) -> Field {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scale(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}
