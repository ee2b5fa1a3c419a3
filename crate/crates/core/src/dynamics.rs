//! Method-of-lines integration of
//!
//! ```text
//! n_t = -((1 + n) u)_x
//! u_t = -(u^2 / 2 + w(n) + phi)_x
//! ```
//!
//! with `phi` slaved to `n` through the potential solve at every stage.

use crate::constitutive::{ConstitutiveError, PressureLaw};
use crate::grid::{Field, Grid};
use crate::poisson::{self, PoissonError};
use rustfft::num_complex::Complex64;

/// Smallest admissible `1 + n`.
pub const VACUUM_FLOOR: f64 = 1e-3;
/// Courant number `dt (max|u| + sonic) / dx` beyond which RK4 loses
/// stability on the spectral grid.
pub const COURANT_LIMIT: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("vacuum floor hit at t = {t}: min(1 + n) = {min_density}")]
    Vacuum { t: f64, min_density: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("Courant number {courant:.3} at t = {t} exceeds the stability limit {COURANT_LIMIT}")]
    Unstable { t: f64, courant: f64 },
    #[error("invalid stepper configuration: {0}")]
    Config(String),
    #[error("probe failed at t = {t}: {message}")]
    Probe { t: f64, message: String },
    #[error("potential solve failed: {0}")]
    Poisson(#[from] PoissonError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

#[derive(Debug, Clone)]
pub struct State {
    pub n: Field,
    pub u: Field,
    pub t: f64,
}

impl State {
    pub fn new(n: Field, u: Field, t: f64) -> Self {
        assert_eq!(n.grid(), u.grid(), "n and u must share a grid");
        Self { n, u, t }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::new(Field::zeros(grid), Field::zeros(grid), 0.0)
    }

    pub fn grid(&self) -> &Grid {
        self.n.grid()
    }

    /// Velocity reversal `(n, u, t) -> (n, -u, t)`.
    pub fn reversed(&self) -> Self {
        Self::new(self.n.clone(), -&self.u, self.t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    /// Fixed step; derived from `cfl` when absent.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_end: f64,
    pub dealias: bool,
    /// Probes run every `probe_stride` steps.
    pub probe_stride: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: None,
            cfl: 0.4,
            t_end: 0.0,
            dealias: true,
            probe_stride: 4,
        }
    }
}

/// Time derivatives together with the potential they were computed from.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub dn: Field,
    pub du: Field,
    pub phi: Field,
}

/// Read-only view handed to probes.
pub struct Snapshot<'a> {
    pub state: &'a State,
    pub phi: &'a Field,
    pub step: usize,
    pub dynamics: &'a Dynamics,
}

pub trait Probe {
    fn sample(&mut self, snapshot: &Snapshot<'_>) -> Result<(), String>;
}

/// Outcome of [`Dynamics::integrate`]. On a step failure the state is the
/// last good one and `error` names the failure.
#[derive(Debug, Clone)]
pub struct Integration {
    pub state: State,
    pub phi: Field,
    pub dt: f64,
    pub steps: usize,
    pub samples: usize,
    pub error: Option<DynamicsError>,
}

#[derive(Debug, Clone)]
pub struct Dynamics {
    law: PressureLaw,
    dealias: bool,
    poisson_tol: f64,
}

impl Dynamics {
    pub fn new(law: PressureLaw, dealias: bool) -> Self {
        Self {
            law,
            dealias,
            poisson_tol: poisson::DEFAULT_TOL,
        }
    }

    pub fn with_poisson_tol(mut self, tol: f64) -> Self {
        self.poisson_tol = tol;
        self
    }

    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Potential for `n`, by contraction from `guess` with a Newton fallback.
    pub fn solve_phi(&self, n: &Field, guess: Option<&Field>) -> Result<Field, PoissonError> {
        match poisson::solve_phi_fixedpoint_from(n, guess, self.poisson_tol, poisson::DEFAULT_MAX_ITER) {
            Ok(s) => Ok(s.phi),
            Err(PoissonError::NotConverged { .. }) => Ok(poisson::solve_phi_newton(n, self.poisson_tol)?.phi),
            Err(e) => Err(e),
        }
    }

    fn flux_derivative(&self, f: &Field) -> Field {
        if !self.dealias {
            return f.derivative(1);
        }
        let cutoff = f.grid().points() / 3;
        let k0 = 2.0 * std::f64::consts::PI / f.grid().length();
        f.apply_symbol(|_, xi| {
            if (xi / k0).round().abs() as usize > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi)
            }
        })
    }

    fn check_state(&self, s: &State) -> Result<(), DynamicsError> {
        if !(s.n.is_finite() && s.u.is_finite()) {
            return Err(DynamicsError::NonFinite(s.t));
        }
        let min_density = 1.0 + s.n.min();
        if min_density < VACUUM_FLOOR {
            return Err(DynamicsError::Vacuum { t: s.t, min_density });
        }
        Ok(())
    }

    /// Right-hand side for a state whose potential is already known.
    pub fn rhs_with_phi(&self, s: &State, phi: &Field) -> Result<(Field, Field), DynamicsError> {
        self.check_state(s)?;
        let mass_flux = s.n.zip_map(&s.u, |n, u| (1.0 + n) * u);
        let w = self.law.w_field(&s.n)?;
        let mut bernoulli = Field::zeros(s.grid());
        for (j, b) in bernoulli.values_mut().iter_mut().enumerate() {
            let u = s.u.values()[j];
            *b = 0.5 * u * u + w.values()[j] + phi.values()[j];
        }
        let dn = -&self.flux_derivative(&mass_flux);
        let du = -&self.flux_derivative(&bernoulli);
        Ok((dn, du))
    }

    pub fn rhs(&self, s: &State, guess: Option<&Field>) -> Result<Rhs, DynamicsError> {
        self.check_state(s)?;
        let phi = self.solve_phi(&s.n, guess)?;
        let (dn, du) = self.rhs_with_phi(s, &phi)?;
        Ok(Rhs { dn, du, phi })
    }

    /// One classical RK4 step from a state with known potential. Returns the
    /// new state and its potential.
    pub fn step_with_phi(&self, s: &State, phi: &Field, dt: f64) -> Result<(State, Field), DynamicsError> {
        let stage = |base: &State, k: &(Field, Field), h: f64| {
            State::new(
                base.n.zip_map(&k.0, |a, b| a + h * b),
                base.u.zip_map(&k.1, |a, b| a + h * b),
                base.t + h,
            )
        };
        let k1 = self.rhs_with_phi(s, phi)?;
        let s2 = stage(s, &k1, 0.5 * dt);
        let r2 = self.rhs(&s2, Some(phi))?;
        let k2 = (r2.dn, r2.du);
        let s3 = stage(s, &k2, 0.5 * dt);
        let r3 = self.rhs(&s3, Some(&r2.phi))?;
        let k3 = (r3.dn, r3.du);
        let s4 = stage(s, &k3, dt);
        let r4 = self.rhs(&s4, Some(&r3.phi))?;
        let k4 = (r4.dn, r4.du);

        let combine = |base: &Field, a: &Field, b: &Field, c: &Field, d: &Field| {
            let mut out = base.clone();
            for (j, o) in out.values_mut().iter_mut().enumerate() {
                *o += dt / 6.0 * (a.values()[j] + 2.0 * b.values()[j] + 2.0 * c.values()[j] + d.values()[j]);
            }
            out
        };
        let next = State::new(
            combine(&s.n, &k1.0, &k2.0, &k3.0, &k4.0),
            combine(&s.u, &k1.1, &k2.1, &k3.1, &k4.1),
            s.t + dt,
        );
        self.check_state(&next)?;
        let phi_next = self.solve_phi(&next.n, Some(&r4.phi))?;
        Ok((next, phi_next))
    }

    pub fn step_rk4(&self, s: &State, dt: f64) -> Result<State, DynamicsError> {
        self.check_state(s)?;
        let phi = self.solve_phi(&s.n, None)?;
        Ok(self.step_with_phi(s, &phi, dt)?.0)
    }

    /// Step size and count for a run: the largest step not exceeding the
    /// configured one such that `t_end` is reached in a multiple of
    /// `probe_stride` steps.
    pub fn plan(&self, s0: &State, cfg: &StepperConfig) -> Result<(f64, usize), DynamicsError> {
        if !(cfg.t_end.is_finite() && cfg.t_end >= 0.0) {
            return Err(DynamicsError::Config(format!("t_end must be >= 0, got {}", cfg.t_end)));
        }
        if cfg.probe_stride == 0 {
            return Err(DynamicsError::Config("probe_stride must be positive".into()));
        }
        let target = match cfg.dt {
            Some(dt) if dt.is_finite() && dt > 0.0 => dt,
            Some(dt) => return Err(DynamicsError::Config(format!("dt must be positive, got {dt}"))),
            None => {
                if !(cfg.cfl.is_finite() && cfg.cfl > 0.0) {
                    return Err(DynamicsError::Config(format!("cfl must be positive, got {}", cfg.cfl)));
                }
                let speed = s0.u.max_abs() + self.law.thresholds().sonic;
                cfg.cfl * s0.grid().dx() / speed
            }
        };
        if cfg.t_end == 0.0 {
            return Ok((target, 0));
        }
        let stride = cfg.probe_stride;
        let blocks = (cfg.t_end / (target * stride as f64)).ceil().max(1.0) as usize;
        let steps = blocks * stride;
        Ok((cfg.t_end / steps as f64, steps))
    }

    /// Runs from `s0` to `s0.t + t_end`, sampling probes at step 0 and every
    /// `probe_stride` steps.
    pub fn integrate(
        &self,
        s0: State,
        cfg: &StepperConfig,
        probes: &mut [&mut dyn Probe],
    ) -> Result<Integration, DynamicsError> {
        let (dt, steps) = self.plan(&s0, cfg)?;
        self.check_state(&s0)?;
        let phi0 = self.solve_phi(&s0.n, None)?;
        let mut run = Integration {
            state: s0,
            phi: phi0,
            dt,
            steps: 0,
            samples: 0,
            error: None,
        };
        let t0 = run.state.t;
        if let Err(e) = self.sample(&run, probes) {
            run.error = Some(e);
            return Ok(run);
        }
        run.samples = 1;
        let dx = run.state.grid().dx();
        let sonic = self.law.thresholds().sonic;
        for step in 1..=steps {
            let courant = dt * (run.state.u.max_abs() + sonic) / dx;
            if courant > COURANT_LIMIT {
                run.error = Some(DynamicsError::Unstable {
                    t: run.state.t,
                    courant,
                });
                return Ok(run);
            }
            match self.step_with_phi(&run.state, &run.phi, dt) {
                Ok((mut next, phi)) => {
                    // Avoid accumulated round-off in the clock.
                    next.t = t0 + step as f64 * dt;
                    run.state = next;
                    run.phi = phi;
                    run.steps = step;
                }
                Err(e) => {
                    run.error = Some(e);
                    return Ok(run);
                }
            }
            if step % cfg.probe_stride == 0 {
                if let Err(e) = self.sample(&run, probes) {
                    run.error = Some(e);
                    return Ok(run);
                }
                run.samples += 1;
            }
        }
        Ok(run)
    }

    fn sample(&self, run: &Integration, probes: &mut [&mut dyn Probe]) -> Result<(), DynamicsError> {
        let snapshot = Snapshot {
            state: &run.state,
            phi: &run.phi,
            step: run.steps,
            dynamics: self,
        };
        for p in probes.iter_mut() {
            p.sample(&snapshot).map_err(|message| DynamicsError::Probe {
                t: run.state.t,
                message,
            })?;
        }
        Ok(())
    }
}
