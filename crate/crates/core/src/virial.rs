//! Conserved densities, their fluxes, the weighted virial functionals
//! `J`, `K`, `I = J + (1 - eps) K`, `L` and their exact time derivatives.
//!
//! Every derivative is evaluated from its exact pre-expansion form, so
//! agreement with finite differences of the functionals is limited only by
//! the discretization. The leading-order splits are provided separately as
//! budgets.

use serde::Serialize;

use crate::constitutive::{big_q, big_r, ConstitutiveError, PressureLaw, Thresholds};
use crate::dynamics::{Dynamics, DynamicsError, State};
use crate::grid::Field;
use crate::path::ObserverPath;
use crate::poisson::LINEAR_TOL;
use crate::resolvent::{helmholtz_inverse_v, ResolventError};
use crate::weight::{WeightError, WeightFamily, MIN_SCALE};

/// Localized masses below this make a margin meaningless.
pub const DEGENERATE_MASS: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VirialError {
    #[error("invalid virial configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Speed regime of an observer path relative to the two thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `sup |y'| < k / sqrt(1 + k)`.
    Slow,
    /// `inf |y'| > sqrt(1 + k)`.
    Fast,
    Intermediate,
}

impl Regime {
    pub fn classify(path: &ObserverPath, thresholds: &Thresholds) -> Self {
        if path.sup_speed() < thresholds.slow {
            Self::Slow
        } else if path.inf_speed() > thresholds.sonic {
            Self::Fast
        } else {
            Self::Intermediate
        }
    }
}

/// Admissible mixing interval `(c^2 / k, k / (1 + k))` for a path with
/// `sup |y'| = c`; `None` when empty.
pub fn epsilon_interval(k: f64, sup_speed: f64) -> Option<(f64, f64)> {
    let lo = sup_speed * sup_speed / k;
    let hi = k / (1.0 + k);
    (lo < hi).then_some((lo, hi))
}

/// Midpoint of the admissible interval, or `k / (2 (1 + k))` when it is
/// empty. The flag reports whether the interval was nonempty.
pub fn auto_epsilon(k: f64, sup_speed: f64) -> (f64, bool) {
    match epsilon_interval(k, sup_speed) {
        Some((lo, hi)) => (0.5 * (lo + hi), true),
        None => (0.5 * k / (1.0 + k), false),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirialConfig {
    pub scale: f64,
    pub epsilon: f64,
    pub path: ObserverPath,
}

impl VirialConfig {
    pub fn new(scale: f64, epsilon: f64, path: ObserverPath) -> Result<Self, VirialError> {
        if !(scale.is_finite() && scale >= MIN_SCALE) {
            return Err(VirialError::Weight(WeightError::Scale(scale)));
        }
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
            return Err(VirialError::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { scale, epsilon, path })
    }

    /// Configuration for the slow regime: requires a nonempty mixing
    /// interval and an `epsilon` inside it (its midpoint when absent).
    pub fn slow(scale: f64, epsilon: Option<f64>, path: ObserverPath, k: f64) -> Result<Self, VirialError> {
        let sup = path.sup_speed();
        let (lo, hi) = epsilon_interval(k, sup).ok_or_else(|| {
            VirialError::Config(format!(
                "sup |y'| = {sup} leaves no admissible epsilon (needs sup |y'| < k / sqrt(1 + k))"
            ))
        })?;
        let epsilon = epsilon.unwrap_or(0.5 * (lo + hi));
        if !(epsilon > lo && epsilon < hi) {
            return Err(VirialError::Config(format!("epsilon = {epsilon} is outside ({lo}, {hi})")));
        }
        Self::new(scale, epsilon, path)
    }

    pub fn weight_at(&self, t: f64) -> Result<WeightFamily, VirialError> {
        Ok(WeightFamily::new(self.scale, self.path.position(t))?)
    }
}

/// `e = (1 + n) u^2 / 2 + W(n) + phi'^2 / 2 + R(phi)`.
pub fn energy_density(law: &PressureLaw, n: &Field, u: &Field, phi: &Field) -> Result<Field, VirialError> {
    let big_w = law.big_w_field(n)?;
    let dphi = phi.derivative(1);
    let mut e = Field::zeros(n.grid());
    for (j, ej) in e.values_mut().iter_mut().enumerate() {
        let (nj, uj, pj, dpj) = (n.values()[j], u.values()[j], phi.values()[j], dphi.values()[j]);
        *ej = 0.5 * (1.0 + nj) * uj * uj + big_w.values()[j] + 0.5 * dpj * dpj + big_r(pj);
    }
    Ok(e)
}

/// `phi_t` from a density rate: `(-d^2 + e^phi) phi_t = n_t`.
pub fn potential_rate(phi: &Field, dn: &Field) -> Result<Field, VirialError> {
    let v = phi.map(f64::exp_m1);
    Ok(helmholtz_inverse_v(dn, &v, LINEAR_TOL)?.solution)
}

/// `F_e = (1 + n) u^3 / 2 + (1 + n) w(n) u + (1 + n) u phi - phi phi_t'`.
pub fn energy_flux_with_rate(
    law: &PressureLaw,
    n: &Field,
    u: &Field,
    phi: &Field,
    dphi_dt: &Field,
) -> Result<Field, VirialError> {
    let w = law.w_field(n)?;
    let dphi_t = dphi_dt.derivative(1);
    let mut f = Field::zeros(n.grid());
    for (j, fj) in f.values_mut().iter_mut().enumerate() {
        let (nj, uj, pj) = (n.values()[j], u.values()[j], phi.values()[j]);
        let rho_u = (1.0 + nj) * uj;
        *fj = 0.5 * rho_u * uj * uj + rho_u * w.values()[j] + rho_u * pj - pj * dphi_t.values()[j];
    }
    Ok(f)
}

/// Energy flux with `phi_t = -(-d^2 + e^phi)^{-1} ((1 + n) u)_x`.
pub fn energy_flux(law: &PressureLaw, n: &Field, u: &Field, phi: &Field) -> Result<Field, VirialError> {
    let dn = -&n.zip_map(u, |a, b| (1.0 + a) * b).derivative(1);
    let rate = potential_rate(phi, &dn)?;
    energy_flux_with_rate(law, n, u, phi, &rate)
}

/// `(m, F_m)` with `m = n u` and
/// `F_m = (1/2 + n) u^2 + S(n) - phi'^2 / 2 + Q(phi)`.
pub fn momentum_density_flux(
    law: &PressureLaw,
    n: &Field,
    u: &Field,
    phi: &Field,
) -> Result<(Field, Field), VirialError> {
    let s = law.s_field(n)?;
    let dphi = phi.derivative(1);
    let m = n * u;
    let mut f = Field::zeros(n.grid());
    for (j, fj) in f.values_mut().iter_mut().enumerate() {
        let (nj, uj, pj, dpj) = (n.values()[j], u.values()[j], phi.values()[j], dphi.values()[j]);
        *fj = (0.5 + nj) * uj * uj + s.values()[j] - 0.5 * dpj * dpj + big_q(pj);
    }
    Ok((m, f))
}

/// Time derivatives of the state and potential.
#[derive(Debug, Clone)]
pub struct Rates {
    pub dn: Field,
    pub du: Field,
    pub dphi: Field,
}

pub fn rates(dynamics: &Dynamics, state: &State, phi: &Field) -> Result<Rates, VirialError> {
    let (dn, du) = dynamics.rhs_with_phi(state, phi)?;
    let dphi = potential_rate(phi, &dn)?;
    Ok(Rates { dn, du, dphi })
}

/// Coercivity split of `dI/dt` in the slow regime. `remainder` is `dI/dt`
/// minus the other five terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowBudget {
    /// `(eps / 2) int phi_A' u^2`.
    pub kinetic: f64,
    /// `((1 - eps) / 2) int phi_A' u (-d^2 + 1)^{-1} u`.
    pub smoothed: f64,
    /// `-y' int phi_A' n u`.
    pub transport: f64,
    /// `(1/2) int phi_A' (k n^2 + (1 - eps) k phi''^2 + (k - eps (1 + k)) phi'^2 + phi^2)`.
    pub potential: f64,
    pub remainder: f64,
}

/// Decay split of `dL/dt` in the fast regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FastBudget {
    /// `-(y'/2) int phi_A' (u^2 + k n^2 + phi'^2 + phi^2)`.
    pub principal: f64,
    /// `int phi_A' (k n u + phi (-d^2 + 1)^{-1} u)`.
    pub r1: f64,
    /// `dL/dt - principal - r1`.
    pub r2: f64,
}

/// All virial quantities at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VirialSample {
    pub t: f64,
    pub y: f64,
    pub ydot: f64,
    pub energy: f64,
    pub mass: f64,
    pub momentum: f64,
    pub j: f64,
    pub k: f64,
    pub i: f64,
    pub l: f64,
    pub dj: f64,
    pub dk: f64,
    pub di: f64,
    pub dl: f64,
    /// `int phi_A' (u^2 + n^2)`.
    pub localized_mass: f64,
    /// `int phi_A' e`.
    pub localized_energy: f64,
    /// `(1/2) int phi_A' (u d(-d^2 + 1)^{-1} d u + k phi''^2 + (1 + k) phi'^2)`.
    pub dk_principal: f64,
    pub n_l2: f64,
    pub u_l2: f64,
    pub min_energy_density: f64,
    pub slow: SlowBudget,
    pub fast: FastBudget,
    pub tail_nu: Vec<f64>,
    pub tail_phi: Vec<f64>,
}

impl VirialSample {
    /// `dI/dt / localized mass`; `None` when the mass is degenerate.
    pub fn slow_margin(&self) -> Option<f64> {
        (self.localized_mass > DEGENERATE_MASS).then(|| self.di / self.localized_mass)
    }

    /// `-dL/dt / localized mass`; `None` when the mass is degenerate.
    pub fn fast_margin(&self) -> Option<f64> {
        (self.localized_mass > DEGENERATE_MASS).then(|| -self.dl / self.localized_mass)
    }
}

/// Tail integrals outside `|x - y| > radius` (distance on the torus):
/// `(int (n^2 + u^2), int (phi''^2 + phi^2))`.
pub fn tail_mass(n: &Field, u: &Field, phi: &Field, y: f64, radius: f64) -> (f64, f64) {
    let grid = n.grid();
    let d2 = phi.derivative(2);
    let mut nu = 0.0;
    let mut ph = 0.0;
    for j in 0..grid.points() {
        if grid.wrap(grid.node(j) - y).abs() > radius {
            nu += n.values()[j].powi(2) + u.values()[j].powi(2);
            ph += d2.values()[j].powi(2) + phi.values()[j].powi(2);
        }
    }
    (nu * grid.dx(), ph * grid.dx())
}

/// Evaluates every functional, exact derivative and budget at one state.
pub fn evaluate(
    dynamics: &Dynamics,
    cfg: &VirialConfig,
    state: &State,
    phi: &Field,
    tail_radii: &[f64],
) -> Result<VirialSample, VirialError> {
    let law = dynamics.law();
    let k = law.k();
    let eps = cfg.epsilon;
    let (n, u) = (&state.n, &state.u);
    let grid = n.grid();
    let (y, ydot) = cfg.path.at(state.t);
    let weight = cfg.weight_at(state.t)?;
    let w0 = weight.eval(grid, 0);
    let w1 = weight.eval(grid, 1);
    let w2 = weight.eval(grid, 2);

    let r = rates(dynamics, state, phi)?;
    let e = energy_density(law, n, u, phi)?;
    let (m, flux_m) = momentum_density_flux(law, n, u, phi)?;
    let flux_e = energy_flux_with_rate(law, n, u, phi, &r.dphi)?;
    let d1 = phi.derivative(1);
    let d2 = phi.derivative(2);
    let dphi_t = r.dphi.derivative(1);
    let smooth_u = u.helmholtz_inverse();
    let dsmooth_u = u.derivative(1).helmholtz_inverse().derivative(1);

    let weighted = |wf: &Field, f: &dyn Fn(usize) -> f64| -> f64 {
        wf.values().iter().enumerate().map(|(j, w)| w * f(j)).sum::<f64>() * grid.dx()
    };
    let nv = n.values();
    let uv = u.values();
    let pv = phi.values();
    let d1v = d1.values();
    let d2v = d2.values();

    let j_val = w0.inner(&m);
    let k_val = -0.5 * weighted(&w1, &|j| uv[j] * d1v[j]);
    let l_val = w0.inner(&e);
    let dj = w1.inner(&flux_m) - ydot * w1.inner(&m);
    let dk = 0.5
        * (-weighted(&w1, &|j| r.du.values()[j] * d1v[j]) - weighted(&w1, &|j| uv[j] * dphi_t.values()[j])
            + ydot * weighted(&w2, &|j| uv[j] * d1v[j]));
    let di = dj + (1.0 - eps) * dk;
    let localized_energy = w1.inner(&e);
    let dl = w1.inner(&flux_e) - ydot * localized_energy;
    let localized_mass = weighted(&w1, &|j| uv[j] * uv[j] + nv[j] * nv[j]);

    let int_u2 = weighted(&w1, &|j| uv[j] * uv[j]);
    let slow_head = SlowBudget {
        kinetic: 0.5 * eps * int_u2,
        smoothed: 0.5 * (1.0 - eps) * weighted(&w1, &|j| uv[j] * smooth_u.values()[j]),
        transport: -ydot * w1.inner(&m),
        potential: 0.5
            * weighted(&w1, &|j| {
                k * nv[j] * nv[j]
                    + (1.0 - eps) * k * d2v[j] * d2v[j]
                    + (k - eps * (1.0 + k)) * d1v[j] * d1v[j]
                    + pv[j] * pv[j]
            }),
        remainder: 0.0,
    };
    let slow = SlowBudget {
        remainder: di - slow_head.kinetic - slow_head.smoothed - slow_head.transport - slow_head.potential,
        ..slow_head
    };
    let principal = -0.5
        * ydot
        * weighted(&w1, &|j| uv[j] * uv[j] + k * nv[j] * nv[j] + d1v[j] * d1v[j] + pv[j] * pv[j]);
    let r1 = weighted(&w1, &|j| k * nv[j] * uv[j] + pv[j] * smooth_u.values()[j]);
    let fast = FastBudget {
        principal,
        r1,
        r2: dl - principal - r1,
    };
    let dk_principal = 0.5
        * weighted(&w1, &|j| {
            uv[j] * dsmooth_u.values()[j] + k * d2v[j] * d2v[j] + (1.0 + k) * d1v[j] * d1v[j]
        });

    let (tail_nu, tail_phi) = tail_radii
        .iter()
        .map(|&radius| tail_mass(n, u, phi, y, radius))
        .unzip();

    Ok(VirialSample {
        t: state.t,
        y,
        ydot,
        energy: e.integral(),
        mass: n.integral(),
        momentum: m.integral(),
        j: j_val,
        k: k_val,
        i: j_val + (1.0 - eps) * k_val,
        l: l_val,
        dj,
        dk,
        di,
        dl,
        localized_mass,
        localized_energy,
        dk_principal,
        n_l2: n.l2(),
        u_l2: u.l2(),
        min_energy_density: e.min(),
        slow,
        fast,
        tail_nu,
        tail_phi,
    })
}

/// `L^2` norms of `e_t + (F_e)_x` and `m_t + (F_m)_x` along an RK4 run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxResiduals {
    pub dt: f64,
    pub t: f64,
    pub energy: f64,
    pub momentum: f64,
}

/// Steps from `s0` with fixed `dt` to about `s0.t + t_center` and compares
/// centered differences of stride `stride * dt` with the flux divergences.
pub fn flux_residuals(
    dynamics: &Dynamics,
    s0: &State,
    dt: f64,
    t_center: f64,
    stride: usize,
) -> Result<FluxResiduals, VirialError> {
    let center = (t_center / dt).round() as usize;
    if stride == 0 || center < stride {
        return Err(VirialError::Config(format!(
            "flux residual needs t_center >= stride * dt ({t_center} < {stride} * {dt})"
        )));
    }
    let law = dynamics.law();
    let mut state = s0.clone();
    let mut phi = dynamics.solve_phi(&state.n, None).map_err(DynamicsError::from)?;
    let mut densities = Vec::with_capacity(2);
    let mut fluxes = None;
    for step in 0..=center + stride {
        if step == center - stride || step == center + stride {
            let e = energy_density(law, &state.n, &state.u, &phi)?;
            densities.push((e, &state.n * &state.u));
        }
        if step == center {
            let flux_e = energy_flux(law, &state.n, &state.u, &phi)?;
            let (_, flux_m) = momentum_density_flux(law, &state.n, &state.u, &phi)?;
            fluxes = Some((flux_e.derivative(1), flux_m.derivative(1), state.t));
        }
        if step < center + stride {
            (state, phi) = dynamics.step_with_phi(&state, &phi, dt)?;
        }
    }
    let (div_e, div_m, t) = fluxes.expect("center step visited");
    let h2 = 2.0 * stride as f64 * dt;
    let (before, after) = (&densities[0], &densities[1]);
    let energy = (&(&after.0 - &before.0).scale(1.0 / h2) + &div_e).l2();
    let momentum = (&(&after.1 - &before.1).scale(1.0 / h2) + &div_m).l2();
    Ok(FluxResiduals { dt, t, energy, momentum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::path::ObserverPath;

    fn iso() -> PressureLaw {
        PressureLaw::isothermal(1.0).unwrap()
    }

    fn dynamics() -> Dynamics {
        Dynamics::new(iso(), true)
    }

    #[test]
    fn zero_state_has_zero_everything() {
        let g = Grid::new(400.0, 1024).unwrap();
        let s = State::zeros(&g);
        let phi = Field::zeros(&g);
        let cfg = VirialConfig::new(50.0, 0.25, ObserverPath::stationary()).unwrap();
        let v = evaluate(&dynamics(), &cfg, &s, &phi, &[20.0]).unwrap();
        for x in [v.energy, v.j, v.k, v.i, v.l, v.dj, v.dk, v.di, v.dl, v.localized_mass] {
            assert_eq!(x, 0.0);
        }
        assert_eq!(v.slow_margin(), None);
        assert_eq!(v.fast_margin(), None);
        assert_eq!((v.tail_nu[0], v.tail_phi[0]), (0.0, 0.0));
        assert!(energy_flux(&iso(), &s.n, &s.u, &phi).unwrap().is_zero());
    }

    #[test]
    fn kinetic_only_state() {
        let g = Grid::new(400.0, 1024).unwrap();
        let n = Field::zeros(&g);
        let u = Field::from_fn(&g, |x| 0.01 * (-x * x / 9.0).exp());
        let phi = Field::zeros(&g);
        let e = energy_density(&iso(), &n, &u, &phi).unwrap();
        let half_u2 = u.map(|v| 0.5 * v * v);
        assert_eq!(e.values(), half_u2.values());
        let (m, fm) = momentum_density_flux(&iso(), &n, &u, &phi).unwrap();
        assert!(m.is_zero());
        assert_eq!(fm.values(), half_u2.values());
        // With n = phi = 0 the exact dJ/dt reduces to (1/2) int phi_A' u^2.
        let cfg = VirialConfig::new(50.0, 0.25, ObserverPath::stationary()).unwrap();
        let w1 = cfg.weight_at(0.0).unwrap().eval(&g, 1);
        let s = State::new(n, u, 0.0);
        let v = evaluate(&dynamics(), &cfg, &s, &phi, &[]).unwrap();
        let oracle = w1.inner(&half_u2);
        assert!(oracle > 0.0);
        assert!((v.dj - oracle).abs() <= 1e-15 * oracle);
    }

    #[test]
    fn even_data_gives_zero_j() {
        let g = Grid::new(400.0, 1024).unwrap();
        let n = Field::from_fn(&g, |x| 0.02 * (-x * x / 4.0).exp());
        let u = Field::from_fn(&g, |x| 0.01 / (x / 3.0).cosh());
        let phi = dynamics().solve_phi(&n, None).unwrap();
        let cfg = VirialConfig::new(50.0, 0.25, ObserverPath::stationary()).unwrap();
        let v = evaluate(&dynamics(), &cfg, &State::new(n, u, 0.0), &phi, &[]).unwrap();
        assert!(v.j.abs() < 1e-17, "{}", v.j);
    }

    #[test]
    fn energy_is_quadratic_for_small_data() {
        let g = Grid::new(200.0, 2048).unwrap();
        let a = 0.01;
        let n = Field::from_fn(&g, |x| a * (-x * x / 4.0).exp());
        let u = Field::from_fn(&g, |x| a * 0.7 * (-(x - 1.0).powi(2) / 4.0).exp());
        let phi = dynamics().solve_phi(&n, None).unwrap();
        let e = energy_density(&iso(), &n, &u, &phi).unwrap().integral();
        let d1 = phi.derivative(1);
        let quad = 0.5
            * (0..g.points())
                .map(|j| {
                    u.values()[j].powi(2) + n.values()[j].powi(2) + d1.values()[j].powi(2) + phi.values()[j].powi(2)
                })
                .sum::<f64>()
            * g.dx();
        assert!((e / quad - 1.0).abs() < 0.02);
    }

    #[test]
    fn epsilon_interval_and_auto() {
        assert_eq!(epsilon_interval(1.0, 0.0), Some((0.0, 0.5)));
        assert_eq!(auto_epsilon(1.0, 0.0), (0.25, true));
        assert_eq!(epsilon_interval(1.0, 0.75), None);
        assert_eq!(auto_epsilon(1.0, 2.0), (0.25, false));
        let path = ObserverPath::constant_speed(0.0, 0.5).unwrap();
        let cfg = VirialConfig::slow(50.0, None, path, 1.0).unwrap();
        assert!((cfg.epsilon - 0.375).abs() < 1e-15);
        let fast = ObserverPath::constant_speed(0.0, 1.0).unwrap();
        assert!(VirialConfig::slow(50.0, None, fast, 1.0).is_err());
        assert!(VirialConfig::slow(50.0, Some(0.1), ObserverPath::constant_speed(0.0, 0.5).unwrap(), 1.0).is_err());
    }

    #[test]
    fn regimes() {
        let t = Thresholds::new(1.0);
        assert_eq!(Regime::classify(&ObserverPath::stationary(), &t), Regime::Slow);
        let fast = ObserverPath::constant_speed(0.0, -2.0).unwrap();
        assert_eq!(Regime::classify(&fast, &t), Regime::Fast);
        let mid = ObserverPath::constant_speed(0.0, 1.0).unwrap();
        assert_eq!(Regime::classify(&mid, &t), Regime::Intermediate);
    }

    #[test]
    fn tail_mass_of_localized_data() {
        let g = Grid::new(200.0, 2048).unwrap();
        let n = Field::from_fn(&g, |x| 0.01 * (-x * x).exp());
        let phi = dynamics().solve_phi(&n, None).unwrap();
        let (nu, ph) = tail_mass(&n, &Field::zeros(&g), &phi, 0.0, 20.0);
        assert!(nu < 1e-300);
        // The potential decays like e^{-|x|}.
        assert!(ph > 0.0 && ph < 1e-18);
        let (_, ph10) = tail_mass(&n, &Field::zeros(&g), &phi, 0.0, 10.0);
        assert!(ph10 > ph * 1e6);
    }
}
