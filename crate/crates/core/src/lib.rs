//! Spectral laboratory for the one-dimensional Euler-Poisson ion system
//!
//! ```text
//! n_t + ((1 + n) u)_x = 0
//! u_t + (u^2 / 2 + w(n) + phi)_x = 0
//! -phi_xx + e^phi - 1 = n
//! ```
//!
//! on a periodic grid, with the energy and momentum flux identities, the
//! weighted virial functionals and their exact time derivatives.

pub mod constitutive;
pub mod dynamics;
pub mod estimates;
pub mod grid;
pub mod ode;
pub mod path;
pub mod poisson;
pub mod quadrature;
pub mod record;
pub mod resolvent;
pub mod virial;
pub mod waveforms;
pub mod weight;

pub use constitutive::{PressureLaw, Thresholds};
pub use grid::{Field, Grid, Norms};
pub use weight::WeightFamily;
