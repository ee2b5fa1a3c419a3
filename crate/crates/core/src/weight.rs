//! The bounded virial weight `phi_A(x) = A tanh(x / A)` and its derivatives.

use crate::grid::{Field, Grid};

/// Smallest admissible weight scale.
pub const MIN_SCALE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("weight scale A must be at least {MIN_SCALE}, got {0}")]
    Scale(f64),
    #[error("weight center must be finite, got {0}")]
    Center(f64),
}

/// `phi_A(x - center)` with `phi_A(z) = A tanh(z / A)`.
///
/// On the torus the displacement `x - center` is wrapped onto
/// `[-length/2, length/2)`, so `phi_A` itself jumps at the antipode of the
/// center while `phi_A'` stays continuous there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFamily {
    scale: f64,
    center: f64,
}

impl WeightFamily {
    pub fn new(scale: f64, center: f64) -> Result<Self, WeightError> {
        if !(scale.is_finite() && scale >= MIN_SCALE) {
            return Err(WeightError::Scale(scale));
        }
        if !center.is_finite() {
            return Err(WeightError::Center(center));
        }
        Ok(Self { scale, center })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Derivative `deriv` (0..=3) of `phi_A` at displacement `z`.
    pub fn value_at(&self, z: f64, deriv: u32) -> f64 {
        let a = self.scale;
        let t = (z / a).tanh();
        let sech2 = 1.0 - t * t;
        match deriv {
            0 => a * t,
            1 => sech2,
            2 => -2.0 / a * sech2 * t,
            3 => -2.0 / (a * a) * sech2 * (1.0 - 3.0 * t * t),
            _ => panic!("weight derivative order must be 0..=3"),
        }
    }

    /// Samples `phi_A^{(deriv)}(x - center)` on the grid.
    pub fn eval(&self, grid: &Grid, deriv: u32) -> Field {
        Field::from_fn(grid, |x| self.value_at(grid.wrap(x - self.center), deriv))
    }

    /// `sech((x - center) / A)`, the square root of `phi_A'`.
    pub fn sech(&self, grid: &Grid) -> Field {
        Field::from_fn(grid, |x| 1.0 / (grid.wrap(x - self.center) / self.scale).cosh())
    }

    /// `cosh((x - center) / A)`.
    pub fn cosh(&self, grid: &Grid) -> Field {
        Field::from_fn(grid, |x| (grid.wrap(x - self.center) / self.scale).cosh())
    }
}
