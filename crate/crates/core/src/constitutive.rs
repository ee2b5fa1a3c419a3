//! Pressure closures and the scalar functions derived from them.
//!
//! With `rho = 1 + n` the enthalpy-like function `w` is defined by
//! `w'(s) = p'(1 + s) / (1 + s)`, `w(0) = 0`. From it
//!
//! * `W(n) = int_0^n w`,
//! * `S(n) = n w(n) - W(n) = int_0^n s w'(s) ds`,
//!
//! and the Boltzmann electron response gives `q(phi) = e^phi - 1`,
//! `Q(phi) = e^phi - 1 - phi` and `R(phi) = phi q(phi) - Q(phi)`.

use std::fmt;
use std::sync::Arc;

use crate::grid::Field;
use crate::quadrature;

/// Densities at or below `-1 + VACUUM_GUARD` are rejected.
pub const VACUUM_GUARD: f64 = 1e-6;
/// Tolerance of the quadratures used for laws without closed forms.
pub const QUADRATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstitutiveError {
    #[error("density perturbation n = {0} is at or below the vacuum guard -1 + {VACUUM_GUARD}")]
    Vacuum(f64),
    #[error("invalid pressure law: {0}")]
    InvalidLaw(String),
    #[error(transparent)]
    Quadrature(#[from] quadrature::QuadratureError),
}

type Derivative = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user supplied convex pressure law given through `p'(rho)`.
#[derive(Clone)]
pub struct CustomLaw {
    label: String,
    dp: Derivative,
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw").field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone)]
pub enum PressureLaw {
    /// `p(rho) = k rho`.
    Isothermal { k: f64 },
    /// `p(rho) = coefficient * rho^gamma`, `k = coefficient * gamma`.
    Polytropic { gamma: f64, coefficient: f64 },
    Custom(CustomLaw),
}

/// Speed thresholds of the two non-existence regimes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Thresholds {
    pub k: f64,
    /// `sqrt(1 + k)`, the long-wave speed.
    pub sonic: f64,
    /// `k / sqrt(1 + k)`.
    pub slow: f64,
}

impl Thresholds {
    pub fn new(k: f64) -> Self {
        let sonic = (1.0 + k).sqrt();
        Self {
            k,
            sonic,
            slow: k / sonic,
        }
    }
}

impl PressureLaw {
    pub fn isothermal(k: f64) -> Result<Self, ConstitutiveError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(ConstitutiveError::InvalidLaw(format!("isothermal k must be positive, got {k}")));
        }
        Ok(Self::Isothermal { k })
    }

    pub fn polytropic(gamma: f64, coefficient: f64) -> Result<Self, ConstitutiveError> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(ConstitutiveError::InvalidLaw(format!("polytropic gamma must be >= 1, got {gamma}")));
        }
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(ConstitutiveError::InvalidLaw(format!(
                "polytropic coefficient must be positive, got {coefficient}"
            )));
        }
        Ok(Self::Polytropic { gamma, coefficient })
    }

    /// Builds a law from `p'(rho)`. Rejects derivatives that are not
    /// positive and nondecreasing on `rho in [0.1, 10]`.
    pub fn custom(
        label: impl Into<String>,
        dp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, ConstitutiveError> {
        let samples: Vec<f64> = (0..=400).map(|i| 0.1 + 9.9 * i as f64 / 400.0).map(&dp).collect();
        if samples.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ConstitutiveError::InvalidLaw("p' must be positive on [0.1, 10]".into()));
        }
        if samples.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12)) {
            return Err(ConstitutiveError::InvalidLaw("p'' must be nonnegative on [0.1, 10]".into()));
        }
        Ok(Self::Custom(CustomLaw {
            label: label.into(),
            dp: Arc::new(dp),
        }))
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Isothermal { .. } => "isothermal",
            Self::Polytropic { .. } => "polytropic",
            Self::Custom(c) => &c.label,
        }
    }

    /// `p'(rho)`.
    pub fn dp(&self, rho: f64) -> f64 {
        match self {
            Self::Isothermal { k } => *k,
            Self::Polytropic { gamma, coefficient } => coefficient * gamma * rho.powf(gamma - 1.0),
            Self::Custom(c) => (c.dp)(rho),
        }
    }

    /// `k = p'(1)`.
    pub fn k(&self) -> f64 {
        self.dp(1.0)
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds::new(self.k())
    }

    fn guard(n: f64) -> Result<(), ConstitutiveError> {
        if n.is_finite() && n > -1.0 + VACUUM_GUARD {
            Ok(())
        } else {
            Err(ConstitutiveError::Vacuum(n))
        }
    }

    /// `w'(n) = p'(1 + n) / (1 + n)`.
    pub fn w_prime(&self, n: f64) -> f64 {
        self.dp(1.0 + n) / (1.0 + n)
    }

    pub fn w(&self, n: f64) -> Result<f64, ConstitutiveError> {
        Self::guard(n)?;
        match self {
            Self::Isothermal { k } => Ok(k * n.ln_1p()),
            Self::Polytropic { gamma, coefficient } => Ok(poly_w(*gamma, *coefficient, n)),
            Self::Custom(_) => Ok(quadrature::integrate(|s| self.w_prime(s), 0.0, n, QUADRATURE_TOL)?),
        }
    }

    /// `W(n) = int_0^n w`.
    pub fn big_w(&self, n: f64) -> Result<f64, ConstitutiveError> {
        Self::guard(n)?;
        match self {
            Self::Isothermal { k } => Ok(k * iso_big_w(n)),
            Self::Polytropic { gamma, coefficient } => Ok(poly_big_w(*gamma, *coefficient, n)),
            Self::Custom(_) => Ok(quadrature::integrate(
                |s| (n - s) * self.w_prime(s),
                0.0,
                n,
                QUADRATURE_TOL,
            )?),
        }
    }

    /// `S(n) = n w(n) - W(n)`.
    pub fn s(&self, n: f64) -> Result<f64, ConstitutiveError> {
        Self::guard(n)?;
        match self {
            Self::Isothermal { k } => Ok(k * iso_s(n)),
            Self::Custom(_) => Ok(quadrature::integrate(|s| s * self.w_prime(s), 0.0, n, QUADRATURE_TOL)?),
            Self::Polytropic { .. } => Ok(n * self.w(n)? - self.big_w(n)?),
        }
    }

    /// `(W(n), S(n))`.
    pub fn big_w_and_s(&self, n: f64) -> Result<(f64, f64), ConstitutiveError> {
        Ok((self.big_w(n)?, self.s(n)?))
    }

    /// Applies `w` nodewise.
    pub fn w_field(&self, n: &Field) -> Result<Field, ConstitutiveError> {
        self.map_field(n, |v| self.w(v))
    }

    pub fn big_w_field(&self, n: &Field) -> Result<Field, ConstitutiveError> {
        self.map_field(n, |v| self.big_w(v))
    }

    pub fn s_field(&self, n: &Field) -> Result<Field, ConstitutiveError> {
        self.map_field(n, |v| self.s(v))
    }

    fn map_field(
        &self,
        n: &Field,
        f: impl Fn(f64) -> Result<f64, ConstitutiveError>,
    ) -> Result<Field, ConstitutiveError> {
        let values = n.values().iter().map(|&v| f(v)).collect::<Result<Vec<_>, _>>()?;
        Ok(Field::new(n.grid(), values))
    }
}

fn iso_big_w(n: f64) -> f64 {
    if n.abs() < 0.05 {
        // sum_{m>=2} (-1)^m n^m / (m (m - 1))
        let mut term = n * n;
        let mut acc = 0.0;
        for m in 2..30 {
            let mf = m as f64;
            acc += term / (mf * (mf - 1.0));
            term *= -n;
        }
        acc
    } else {
        (1.0 + n) * n.ln_1p() - n
    }
}

fn iso_s(n: f64) -> f64 {
    if n.abs() < 0.05 {
        let mut term = n * n;
        let mut acc = 0.0;
        for m in 2..30 {
            acc += term / m as f64;
            term *= -n;
        }
        acc
    } else {
        n - n.ln_1p()
    }
}

fn poly_w(gamma: f64, coefficient: f64, n: f64) -> f64 {
    if gamma == 1.0 {
        return coefficient * n.ln_1p();
    }
    coefficient * gamma / (gamma - 1.0) * ((gamma - 1.0) * n.ln_1p()).exp_m1()
}

fn poly_big_w(gamma: f64, coefficient: f64, n: f64) -> f64 {
    if gamma == 1.0 {
        return coefficient * iso_big_w(n);
    }
    // (1 + n)^gamma - 1 - gamma n, by binomial series near 0.
    let excess = if n.abs() < 1e-2 {
        let mut coef = gamma * (gamma - 1.0) / 2.0;
        let mut power = n * n;
        let mut acc = 0.0;
        for m in 2..40 {
            acc += coef * power;
            let mf = m as f64;
            coef *= (gamma - mf) / (mf + 1.0);
            power *= n;
            if coef == 0.0 {
                break;
            }
        }
        acc
    } else {
        (gamma * n.ln_1p()).exp_m1() - gamma * n
    };
    coefficient / (gamma - 1.0) * excess
}

/// Boltzmann electron terms at a given potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronTerms {
    /// `q = e^phi - 1`.
    pub q: f64,
    /// `Q = int_0^phi q = e^phi - 1 - phi`.
    pub big_q: f64,
    /// `R = phi q - Q = phi e^phi - e^phi + 1`.
    pub r: f64,
}

pub fn q(phi: f64) -> f64 {
    phi.exp_m1()
}

pub fn big_q(phi: f64) -> f64 {
    if phi.abs() < 0.1 {
        series(phi, |m| 1.0 / factorial(m), 2)
    } else {
        phi.exp_m1() - phi
    }
}

pub fn big_r(phi: f64) -> f64 {
    if phi.abs() < 0.1 {
        series(phi, |m| (m - 1) as f64 / factorial(m), 2)
    } else {
        phi * phi.exp() - phi.exp_m1()
    }
}

pub fn electron_terms(phi: f64) -> ElectronTerms {
    ElectronTerms {
        q: q(phi),
        big_q: big_q(phi),
        r: big_r(phi),
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

fn series(x: f64, coef: impl Fn(u32) -> f64, start: u32) -> f64 {
    let mut acc = 0.0;
    let mut power = x.powi(start as i32);
    for m in start..start + 16 {
        acc += coef(m) * power;
        power *= x;
    }
    acc
}
