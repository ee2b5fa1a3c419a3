//! Initial data: localized packets and solitary waves.
//!
//! A wave `(n, u, phi)(x - c t)` satisfies `u = c n / (1 + n)` and
//! `phi = F(n) := c^2 (1 - (1 + n)^{-2}) / 2 - w(n)`, leaving the profile
//! equation `phi'' = q(phi) - n(phi)` with first integral
//! `phi'^2 / 2 = V(phi)`, `V(phi) = int_0^phi (q(s) - n(s)) ds`.
//! Solitary waves exist when `V > 0` on `(0, phi_max)` and `V(phi_max) = 0`
//! with `phi_max` below the fold of `F`.

use serde::Serialize;

use crate::constitutive::{big_q, ConstitutiveError, PressureLaw, Thresholds, VACUUM_GUARD};
use crate::dynamics::State;
use crate::grid::{Field, Grid};
use crate::ode::{self, Tolerance};
use crate::quadrature::{self, QuadratureError};

/// Profile tails at the domain ends must be below this.
pub const TAIL_TOL: f64 = 1e-10;
pub const PROFILE_TOL: Tolerance = Tolerance {
    rtol: 1e-11,
    atol: 1e-14,
};
const ROOT_MAX_ITER: usize = 200;
const SCAN_POINTS: usize = 4000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WaveformError {
    #[error("speed c = {c} is not above the sonic speed {sonic}")]
    Subsonic { c: f64, sonic: f64 },
    #[error("phi = {phi} is beyond the fold of the Bernoulli branch at phi = {phi_fold}")]
    FoldExceeded { phi: f64, phi_fold: f64 },
    #[error("no solitary wave at c = {c}: {reason}")]
    NonExistence { c: f64, reason: String },
    #[error("domain too short: profile tail {tail:e} exceeds {TAIL_TOL:e} at the boundary")]
    InsufficientDomain { tail: f64 },
    #[error("packet width {width} is below four grid spacings ({min})")]
    Resolution { width: f64, min: f64 },
    #[error("packet amplitude {0} exceeds 0.5")]
    Amplitude(f64),
    #[error("profile integration failed: {0}")]
    Ode(String),
    #[error("root search failed for phi = {0}")]
    Root(f64),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Traveling-wave reduction at a fixed supersonic speed.
#[derive(Debug, Clone)]
pub struct TravelingWave {
    law: PressureLaw,
    c: f64,
    thresholds: Thresholds,
    n_fold: f64,
    phi_fold: f64,
}

impl TravelingWave {
    pub fn new(law: &PressureLaw, c: f64) -> Result<Self, WaveformError> {
        let thresholds = law.thresholds();
        if !(c.is_finite() && c > thresholds.sonic) {
            return Err(WaveformError::Subsonic {
                c,
                sonic: thresholds.sonic,
            });
        }
        let mut wave = Self {
            law: law.clone(),
            c,
            thresholds,
            n_fold: f64::INFINITY,
            phi_fold: f64::INFINITY,
        };
        wave.n_fold = wave.locate_fold();
        wave.phi_fold = wave.forward(wave.n_fold)?;
        Ok(wave)
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    /// Density and potential where `F'(n)` first vanishes.
    pub fn fold(&self) -> (f64, f64) {
        (self.n_fold, self.phi_fold)
    }

    fn locate_fold(&self) -> f64 {
        if let PressureLaw::Isothermal { k } = self.law {
            return self.c / k.sqrt() - 1.0;
        }
        let mut hi = 1.0;
        while self.forward_prime(hi) > 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..ROOT_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if self.forward_prime(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// `F(n) = c^2 (1 - (1 + n)^{-2}) / 2 - w(n)`.
    pub fn forward(&self, n: f64) -> Result<f64, WaveformError> {
        let kinetic = -0.5 * self.c * self.c * (-2.0 * n.ln_1p()).exp_m1();
        Ok(kinetic - self.law.w(n)?)
    }

    /// `F'(n) = c^2 (1 + n)^{-3} - w'(n)`.
    pub fn forward_prime(&self, n: f64) -> f64 {
        self.c * self.c / (1.0 + n).powi(3) - self.law.w_prime(n)
    }

    /// Root `n` of `F(n) = phi` on the branch through `n = 0`.
    pub fn density(&self, phi: f64) -> Result<f64, WaveformError> {
        if phi == 0.0 {
            return Ok(0.0);
        }
        if phi > self.phi_fold {
            return Err(WaveformError::FoldExceeded {
                phi,
                phi_fold: self.phi_fold,
            });
        }
        let (mut lo, mut hi) = if phi > 0.0 {
            (0.0, self.n_fold)
        } else {
            let mut lo = -0.5;
            while self.forward(lo)? > phi {
                lo = -1.0 + 0.5 * (1.0 + lo);
                if 1.0 + lo < 2.0 * VACUUM_GUARD {
                    return Err(WaveformError::Root(phi));
                }
            }
            (lo, 0.0)
        };
        // Newton from the linearization, kept inside the bracket.
        let mut n = (phi / (self.c * self.c - self.thresholds.k)).clamp(lo, hi);
        for _ in 0..ROOT_MAX_ITER {
            let g = self.forward(n)? - phi;
            if g == 0.0 {
                return Ok(n);
            }
            if g > 0.0 {
                hi = n;
            } else {
                lo = n;
            }
            let slope = self.forward_prime(n);
            let newton = n - g / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - n).abs() <= 1e-15 * n.abs().max(1e-300) || hi - lo <= 1e-16 * hi.abs().max(lo.abs()) {
                return Ok(next);
            }
            n = next;
        }
        Err(WaveformError::Root(phi))
    }

    /// Sagdeev potential as a function of the density on the branch,
    /// `V = Q(F(n)) - n F(n) + c^2 n^2 / (2 (1 + n)) - W(n)`.
    pub fn sagdeev_at_density(&self, n: f64) -> Result<f64, WaveformError> {
        let phi = self.forward(n)?;
        Ok(big_q(phi) - n * phi + 0.5 * self.c * self.c * n * n / (1.0 + n) - self.law.big_w(n)?)
    }

    /// `V(phi) = int_0^phi (q(s) - n(s)) ds`, evaluated in closed form.
    pub fn sagdeev(&self, phi: f64) -> Result<f64, WaveformError> {
        self.sagdeev_at_density(self.density(phi)?)
    }

    /// The same potential by adaptive quadrature of its defining integral.
    pub fn sagdeev_by_quadrature(&self, phi: f64, tol: f64) -> Result<f64, WaveformError> {
        let failure = std::cell::Cell::new(None);
        let value = quadrature::integrate(
            |s| match self.density(s) {
                Ok(n) => s.exp_m1() - n,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            },
            0.0,
            phi,
            tol,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(value?)
    }

    /// Second zero of the Sagdeev potential, located by a scan up to the
    /// fold followed by bisection.
    pub fn phi_max(&self) -> Result<f64, WaveformError> {
        let curvature = 1.0 - 1.0 / (self.c * self.c - self.thresholds.k);
        if curvature <= 0.0 {
            return Err(WaveformError::NonExistence {
                c: self.c,
                reason: "the Sagdeev potential is not convex at the origin".into(),
            });
        }
        let top = self.phi_fold;
        let mut prev = 0.0;
        for i in 1..=SCAN_POINTS {
            let phi = top * i as f64 / SCAN_POINTS as f64;
            let v = if i == SCAN_POINTS {
                self.sagdeev_at_density(self.n_fold)?
            } else {
                self.sagdeev(phi)?
            };
            if v <= 0.0 {
                return self.bisect_zero(prev, phi);
            }
            prev = phi;
        }
        Err(WaveformError::NonExistence {
            c: self.c,
            reason: format!("the Sagdeev potential stays positive up to the fold at phi = {top}"),
        })
    }

    fn bisect_zero(&self, mut lo: f64, mut hi: f64) -> Result<f64, WaveformError> {
        while hi - lo > 1e-13 * hi.max(1e-3) {
            let mid = 0.5 * (lo + hi);
            if self.sagdeev(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Root `n(phi)` of the Bernoulli relation at speed `c`.
pub fn bernoulli_density(phi: f64, c: f64, law: &PressureLaw) -> Result<f64, WaveformError> {
    TravelingWave::new(law, c)?.density(phi)
}

pub fn sagdeev_potential(phi: f64, c: f64, law: &PressureLaw) -> Result<f64, WaveformError> {
    TravelingWave::new(law, c)?.sagdeev(phi)
}

/// Nodewise and equation residuals of a constructed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileResiduals {
    /// `max |u - c n / (1 + n)|`.
    pub mass: f64,
    /// `max |u^2 / 2 - c u + w(n) + phi|`.
    pub bernoulli: f64,
    /// `max |-phi'' + q(phi) - n|`.
    pub poisson: f64,
    /// `max(|n|, |phi|)` at the domain ends.
    pub tail: f64,
}

impl ProfileResiduals {
    pub fn max(&self) -> f64 {
        self.mass.max(self.bernoulli).max(self.poisson)
    }
}

#[derive(Debug, Clone)]
pub struct SolitaryProfile {
    pub c: f64,
    pub phi_max: f64,
    pub n: Field,
    pub u: Field,
    pub phi: Field,
    pub residuals: ProfileResiduals,
}

impl SolitaryProfile {
    pub fn amplitude(&self) -> f64 {
        self.n.max()
    }

    pub fn state(&self) -> State {
        State::new(self.n.clone(), self.u.clone(), 0.0)
    }

    /// Nodewise maximum over `((1 + n) u - c n)'`, `(u^2 / 2 + w(n) + phi - c u)'`
    /// and `-phi'' + q(phi) - n`, all with spectral derivatives.
    pub fn traveling_residual(&self, law: &PressureLaw) -> Result<f64, WaveformError> {
        let c = self.c;
        let w = law.w_field(&self.n)?;
        let mass = self.n.zip_map(&self.u, |n, u| (1.0 + n) * u - c * n).derivative(1);
        let mut bernoulli = Field::zeros(self.n.grid());
        for (j, b) in bernoulli.values_mut().iter_mut().enumerate() {
            let u = self.u.values()[j];
            *b = 0.5 * u * u + w.values()[j] + self.phi.values()[j] - c * u;
        }
        let potential = crate::poisson::equation_residual(&self.phi, &self.n);
        Ok(mass.max_abs().max(bernoulli.derivative(1).max_abs()).max(potential.max_abs()))
    }
}

/// Even solitary profile centered at `x = 0`.
pub fn solitary_profile(c: f64, law: &PressureLaw, grid: &Grid) -> Result<SolitaryProfile, WaveformError> {
    let wave = TravelingWave::new(law, c)?;
    let phi_max = wave.phi_max()?;
    let points = grid.points();
    let half = points / 2;
    // Positions 0, dx, ..., L/2; the last one is the node at -L/2 mirrored.
    let xs: Vec<f64> = (0..=half).map(|i| i as f64 * grid.dx()).collect();
    let mut n_half = vec![0.0; half + 1];
    let mut phi_half = vec![0.0; half + 1];
    let ode_err = |e: ode::OdeError<WaveformError>| match e {
        ode::OdeError::Rhs(inner) => inner,
        other => WaveformError::Ode(other.to_string()),
    };

    // Near the peak: phi'' = q(phi) - n(phi) from (phi_max, 0).
    let mut y = [phi_max, 0.0];
    let mut step = 0.1 * grid.dx();
    phi_half[0] = phi_max;
    n_half[0] = wave.density(phi_max)?;
    let mut i = 0;
    while i < half && y[0] > 0.5 * phi_max {
        let out = ode::integrate(
            |_, y: &[f64; 2]| {
                let phi = y[0].min(wave.phi_fold);
                Ok([y[1], phi.exp_m1() - wave.density(phi)?])
            },
            xs[i],
            y,
            xs[i + 1],
            step,
            PROFILE_TOL,
        )
        .map_err(ode_err)?;
        y = out.y;
        step = out.next_step;
        i += 1;
        phi_half[i] = y[0];
        n_half[i] = wave.density(y[0])?;
    }

    // Tail: n' = -sqrt(2 V(n)) / F'(n), stable as n decays.
    let mut n = [n_half[i]];
    while i < half {
        let out = ode::integrate(
            |_, y: &[f64; 1]| {
                let v = wave.sagdeev_at_density(y[0])?.max(0.0);
                Ok([-y[0].signum() * (2.0 * v).sqrt() / wave.forward_prime(y[0])])
            },
            xs[i],
            n,
            xs[i + 1],
            step,
            PROFILE_TOL,
        )
        .map_err(ode_err)?;
        n = out.y;
        step = out.next_step;
        i += 1;
        n_half[i] = n[0];
        phi_half[i] = wave.forward(n[0])?;
    }

    let tail = n_half[half].abs().max(phi_half[half].abs());
    if tail > TAIL_TOL {
        return Err(WaveformError::InsufficientDomain { tail });
    }

    let mirror = |half_values: &[f64]| {
        let mut values = vec![0.0; points];
        for (j, v) in values.iter_mut().enumerate() {
            let offset = if j >= half { j - half } else { half - j };
            *v = half_values[offset];
        }
        Field::new(grid, values)
    };
    let n = mirror(&n_half);
    let phi = mirror(&phi_half);
    let u = n.map(|v| c * v / (1.0 + v));
    let residuals = profile_residuals(&wave, &n, &u, &phi)?;
    Ok(SolitaryProfile {
        c,
        phi_max,
        n,
        u,
        phi,
        residuals,
    })
}

fn profile_residuals(wave: &TravelingWave, n: &Field, u: &Field, phi: &Field) -> Result<ProfileResiduals, WaveformError> {
    let c = wave.c;
    let w = wave.law.w_field(n)?;
    let mut mass: f64 = 0.0;
    let mut bernoulli: f64 = 0.0;
    for j in 0..n.values().len() {
        let (nj, uj, pj) = (n.values()[j], u.values()[j], phi.values()[j]);
        mass = mass.max((uj - c * nj / (1.0 + nj)).abs());
        bernoulli = bernoulli.max((0.5 * uj * uj - c * uj + w.values()[j] + pj).abs());
    }
    let poisson = crate::poisson::equation_residual(phi, n).max_abs();
    let last = n.values().len() - 1;
    let tail = [n.values()[0], n.values()[last], phi.values()[0], phi.values()[last]]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ProfileResiduals {
        mass,
        bernoulli,
        poisson,
        tail,
    })
}

/// Largest speed with a solitary wave, by bisection between `lo` (which
/// must admit one) and `hi` (which must not), to relative width `rtol`.
pub fn existence_ceiling(law: &PressureLaw, mut lo: f64, mut hi: f64, rtol: f64) -> Result<f64, WaveformError> {
    let exists = |c: f64| TravelingWave::new(law, c).and_then(|w| w.phi_max()).is_ok();
    if !exists(lo) || exists(hi) {
        return Err(WaveformError::NonExistence {
            c: hi,
            reason: "the bracket does not straddle the existence ceiling".into(),
        });
    }
    while hi - lo > rtol * hi {
        let mid = 0.5 * (lo + hi);
        if exists(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketShape {
    /// `exp(-((x - center) / width)^2)`.
    Gaussian,
    /// `sech^2((x - center) / width)`.
    Sech2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityMode {
    Still,
    /// Long-wave right mover, `u = sqrt(1 + k) n`.
    RightMoving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Packet {
    pub shape: PacketShape,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub velocity: VelocityMode,
}

impl Packet {
    pub fn state(&self, grid: &Grid, law: &PressureLaw) -> Result<State, WaveformError> {
        if !(self.amplitude.is_finite() && self.amplitude.abs() <= 0.5) {
            return Err(WaveformError::Amplitude(self.amplitude));
        }
        let min = 4.0 * grid.dx();
        if !(self.width.is_finite() && self.width >= min) {
            return Err(WaveformError::Resolution { width: self.width, min });
        }
        let profile = |x: f64| {
            let z = grid.wrap(x - self.center) / self.width;
            match self.shape {
                PacketShape::Gaussian => (-z * z).exp(),
                PacketShape::Sech2 => 1.0 / z.cosh().powi(2),
            }
        };
        let n = Field::from_fn(grid, |x| self.amplitude * profile(x));
        let u = match self.velocity {
            VelocityMode::Still => Field::zeros(grid),
            VelocityMode::RightMoving => n.scale(law.thresholds().sonic),
        };
        Ok(State::new(n, u, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso() -> PressureLaw {
        PressureLaw::isothermal(1.0).unwrap()
    }

    #[test]
    fn density_vanishes_at_zero_potential() {
        assert_eq!(bernoulli_density(0.0, 1.5, &iso()).unwrap(), 0.0);
    }

    #[test]
    fn density_slope_at_origin() {
        let n = bernoulli_density(1e-8, 2.0, &iso()).unwrap();
        assert!((n / 1e-8 - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn density_matches_tabulated_inverse() {
        let law = iso();
        let c = 1.5;
        let wave = TravelingWave::new(&law, c).unwrap();
        // Forward map tabulated on a dense grid, inverted by local cubic
        // interpolation.
        let forward = |n: f64| 0.5 * c * c * (1.0 - 1.0 / ((1.0 + n) * (1.0 + n))) - n.ln_1p();
        let table: Vec<(f64, f64)> = (0..=20000).map(|i| i as f64 * 1e-5).map(|n| (forward(n), n)).collect();
        let idx = table.iter().position(|&(p, _)| p > 0.1).unwrap();
        let pts = &table[idx - 2..idx + 2];
        let mut oracle = 0.0;
        for (a, &(pa, na)) in pts.iter().enumerate() {
            let mut l = 1.0;
            for (b, &(pb, _)) in pts.iter().enumerate() {
                if a != b {
                    l *= (0.1 - pb) / (pa - pb);
                }
            }
            oracle += l * na;
        }
        let n = wave.density(0.1).unwrap();
        assert!((n - oracle).abs() <= 1e-10, "{n} vs {oracle}");
        assert!((forward(n) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn density_inverts_the_forward_map() {
        let law = PressureLaw::polytropic(5.0 / 3.0, 0.6).unwrap();
        let wave = TravelingWave::new(&law, 1.3 * law.thresholds().sonic).unwrap();
        let (n_fold, _) = wave.fold();
        for i in 1..50 {
            let n = n_fold * i as f64 / 50.0;
            let back = wave.density(wave.forward(n).unwrap()).unwrap();
            assert!((back - n).abs() <= 1e-10, "n = {n}");
        }
        for n in [-0.3, -0.01, -1e-6] {
            let back = wave.density(wave.forward(n).unwrap()).unwrap();
            assert!((back - n).abs() <= 1e-12);
        }
    }

    #[test]
    fn fold_is_reported() {
        let wave = TravelingWave::new(&iso(), 1.5).unwrap();
        let (_, phi_fold) = wave.fold();
        assert!(matches!(wave.density(phi_fold * 1.01), Err(WaveformError::FoldExceeded { .. })));
    }

    #[test]
    fn sagdeev_closed_form_matches_quadrature() {
        let law = iso();
        for ratio in [1.02, 1.05, 1.2, 1.4] {
            let c = ratio * law.thresholds().sonic;
            let wave = TravelingWave::new(&law, c).unwrap();
            let (_, phi_fold) = wave.fold();
            for frac in [-0.05, 0.01, 0.2, 0.5, 0.9] {
                let phi = frac * phi_fold;
                let closed = wave.sagdeev(phi).unwrap();
                let quad = wave.sagdeev_by_quadrature(phi, 1e-15).unwrap();
                assert!((closed - quad).abs() <= 1e-13 + 1e-9 * quad.abs(), "c/sonic {ratio} phi {phi}");
            }
        }
    }

    #[test]
    fn sagdeev_curvature_sign() {
        let law = iso();
        let c = 1.5;
        let wave = TravelingWave::new(&law, c).unwrap();
        let h = 1e-4;
        let vp = wave.sagdeev_by_quadrature(h, 1e-18).unwrap();
        let vm = wave.sagdeev_by_quadrature(-h, 1e-18).unwrap();
        let second = (vp + vm) / (h * h);
        let expected = 1.0 - 1.0 / (c * c - 1.0);
        assert!((second - expected).abs() < 1e-3, "{second}");
        assert!(second > 0.0);
        assert_eq!(wave.sagdeev(0.0).unwrap(), 0.0);
    }

    #[test]
    fn phi_max_exists_just_above_sonic() {
        let law = iso();
        let wave = TravelingWave::new(&law, 1.05 * law.thresholds().sonic).unwrap();
        let phi_max = wave.phi_max().unwrap();
        assert!(phi_max > 0.0);
        assert!(wave.sagdeev(phi_max).unwrap().abs() < 1e-12);
        for i in 1..100 {
            assert!(wave.sagdeev(phi_max * i as f64 / 100.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn no_wave_at_or_below_sonic() {
        let law = iso();
        let sonic = law.thresholds().sonic;
        assert!(matches!(
            TravelingWave::new(&law, 0.99 * sonic),
            Err(WaveformError::Subsonic { .. })
        ));
        assert!(bernoulli_density(0.01, sonic, &law).is_err());
    }

    #[test]
    fn ceiling_is_bracketed() {
        let law = iso();
        let sonic = law.thresholds().sonic;
        let c_m = existence_ceiling(&law, 1.01 * sonic, 3.0 * sonic, 1e-6).unwrap();
        assert!(c_m > 1.05 * sonic && c_m < 3.0 * sonic);
        let beyond = TravelingWave::new(&law, c_m * 1.001).unwrap();
        assert!(beyond.phi_max().is_err());
    }

    #[test]
    fn profile_satisfies_the_wave_equations() {
        let law = iso();
        let grid = Grid::new(200.0, 2048).unwrap();
        let c = 1.05 * law.thresholds().sonic;
        let p = solitary_profile(c, &law, &grid).unwrap();
        assert!(p.residuals.mass <= 1e-10);
        assert!(p.residuals.bernoulli <= 1e-8);
        assert!(p.residuals.poisson <= 1e-8, "{:?}", p.residuals);
        assert!(p.residuals.tail <= TAIL_TOL);
        let mid = grid.center_index();
        assert_eq!(p.phi.values()[mid], p.phi_max);
        for j in 1..mid {
            assert_eq!(p.n.values()[mid + j], p.n.values()[mid - j]);
        }
    }

    #[test]
    fn short_domain_is_rejected() {
        let law = iso();
        let grid = Grid::new(20.0, 256).unwrap();
        assert!(matches!(
            solitary_profile(1.05 * law.thresholds().sonic, &law, &grid),
            Err(WaveformError::InsufficientDomain { .. })
        ));
    }

    #[test]
    fn zero_amplitude_packet_is_zero() {
        let grid = Grid::new(100.0, 512).unwrap();
        let p = Packet {
            shape: PacketShape::Gaussian,
            amplitude: 0.0,
            width: 2.0,
            center: 0.0,
            velocity: VelocityMode::RightMoving,
        };
        let s = p.state(&grid, &iso()).unwrap();
        assert!(s.n.is_zero() && s.u.is_zero());
    }

    #[test]
    fn gaussian_packet_norm() {
        let grid = Grid::new(200.0, 4096).unwrap();
        let p = Packet {
            shape: PacketShape::Gaussian,
            amplitude: 0.01,
            width: 2.0,
            center: 0.0,
            velocity: VelocityMode::Still,
        };
        let s = p.state(&grid, &iso()).unwrap();
        // int exp(-2 x^2 / w^2) dx = w sqrt(pi / 2).
        let oracle = 0.01 * (2.0 * (std::f64::consts::PI / 2.0).sqrt()).sqrt();
        assert!((s.n.l2() - oracle).abs() < 1e-14);
        assert!(s.u.is_zero());
    }

    #[test]
    fn packet_guards() {
        let grid = Grid::new(100.0, 256).unwrap();
        let mut p = Packet {
            shape: PacketShape::Sech2,
            amplitude: 0.6,
            width: 2.0,
            center: 0.0,
            velocity: VelocityMode::Still,
        };
        assert!(matches!(p.state(&grid, &iso()), Err(WaveformError::Amplitude(_))));
        p.amplitude = 0.1;
        p.width = 1.0;
        assert!(matches!(p.state(&grid, &iso()), Err(WaveformError::Resolution { .. })));
    }
}
