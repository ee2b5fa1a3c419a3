//! Bounds on the virial functionals over random small states, the exact
//! derivatives against finite differences, and the remainder budgets.

use eplab_core::dynamics::{Dynamics, State, StepperConfig};
use eplab_core::path::ObserverPath;
use eplab_core::record::VirialProbe;
use eplab_core::virial::{self, VirialConfig, VirialSample};
use eplab_core::waveforms::{solitary_profile, Packet, PacketShape, VelocityMode};
use eplab_core::{Field, Grid, PressureLaw};
use proptest::prelude::*;

fn iso() -> PressureLaw {
    PressureLaw::isothermal(1.0).unwrap()
}

fn bump(grid: &Grid, a: f64, c: f64, w: f64) -> Field {
    Field::from_fn(grid, |x| a * (-((grid.wrap(x - c)) / w).powi(2)).exp())
}

fn sample(state: &State, scale: f64, y: f64, ydot: f64) -> VirialSample {
    let d = Dynamics::new(iso(), true);
    let phi = d.solve_phi(&state.n, None).unwrap();
    let path = ObserverPath::constant_speed(y, ydot).unwrap();
    let cfg = VirialConfig::new(scale, 0.25, path).unwrap();
    virial::evaluate(&d, &cfg, state, &phi, &[]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn functional_bounds_on_random_states(
        an in -0.1f64..0.1, cn in -20.0f64..20.0, wn in 0.8f64..4.0,
        au in -0.3f64..0.3, cu in -20.0f64..20.0, wu in 0.8f64..4.0,
        scale in 10.0f64..60.0, y in -10.0f64..10.0, ydot in -3.0f64..3.0,
    ) {
        let grid = Grid::new(160.0, 512).unwrap();
        let n = bump(&grid, an, cn, wn);
        let u = bump(&grid, au, cu, wu);
        let (n_l2, u_l2) = (n.l2(), u.l2());
        let state = State::new(n, u, 0.0);
        let v = sample(&state, scale, y, ydot);
        prop_assert!(v.min_energy_density >= 0.0);
        prop_assert!(v.j.abs() <= scale * n_l2 * u_l2 * (1.0 + 1e-12));
        prop_assert!(v.l.abs() <= scale * v.energy * (1.0 + 1e-12));
        let quadratic = n_l2 * n_l2 + u_l2 * u_l2;
        if quadratic > 0.0 {
            let ratio = v.energy / quadratic;
            prop_assert!((0.3..=3.0).contains(&ratio), "E / int(u^2 + n^2) = {}", ratio);
        }
    }
}

#[test]
fn even_data_has_vanishing_j_and_l() {
    let grid = Grid::new(160.0, 512).unwrap();
    let state = State::new(bump(&grid, 0.05, 0.0, 2.0), bump(&grid, 0.1, 0.0, 3.0), 0.0);
    let v = sample(&state, 20.0, 0.0, 0.0);
    assert!(v.j.abs() < 1e-16 && v.l.abs() < 1e-16);
}

#[test]
fn zero_state_gives_zero_energy_density() {
    let grid = Grid::new(160.0, 512).unwrap();
    let v = sample(&State::zeros(&grid), 20.0, 0.0, 0.0);
    assert_eq!((v.energy, v.min_energy_density), (0.0, 0.0));
}

#[test]
fn smoothed_k_rate_matches_principal_part_for_small_data() {
    let law = iso();
    for scale in [20.0, 50.0, 100.0] {
        let grid = Grid::new(20.0 * scale, 8192).unwrap();
        for amplitude in [1e-3, 1e-2] {
            for velocity in [VelocityMode::Still, VelocityMode::RightMoving] {
                let state = Packet { shape: PacketShape::Gaussian, amplitude, width: 2.0, center: 3.0, velocity }
                    .state(&grid, &law)
                    .unwrap();
                let v = sample(&state, scale, 0.0, 0.0);
                let gap = (v.dk - v.dk_principal).abs();
                assert!(gap <= (amplitude + 1.0 / scale) * v.localized_mass, "A {scale} a {amplitude}: {gap:e}");
            }
        }
    }
}

#[test]
fn exact_derivatives_match_finite_differences() {
    let grid = Grid::new(100.0, 1024).unwrap();
    let law = iso();
    let d = Dynamics::new(law.clone(), true);
    let s0 = Packet { shape: PacketShape::Gaussian, amplitude: 0.01, width: 2.0, center: 0.0, velocity: VelocityMode::RightMoving }
        .state(&grid, &law)
        .unwrap();
    let path = ObserverPath::constant_speed(-2.0, 0.3).unwrap();
    let mut probe = VirialProbe::new(VirialConfig::new(20.0, 0.25, path).unwrap(), vec![]);
    d.integrate(s0, &StepperConfig { t_end: 4.0, ..Default::default() }, &mut [&mut probe]).unwrap();
    let rec = probe.into_record();
    assert!(rec.derivative_mismatch(|s| s.j, |s| s.dj) <= 1e-6);
    assert!(rec.derivative_mismatch(|s| s.k, |s| s.dk) <= 1e-6);
    assert!(rec.derivative_mismatch(|s| s.i, |s| s.di) <= 1e-6);
    assert!(rec.derivative_mismatch(|s| s.l, |s| s.dl) <= 1e-6);
}

#[test]
fn slow_budget_terms_are_nonnegative_at_rest() {
    let grid = Grid::new(400.0, 4096).unwrap();
    let state = Packet { shape: PacketShape::Gaussian, amplitude: 0.01, width: 2.0, center: 5.0, velocity: VelocityMode::RightMoving }
        .state(&grid, &iso())
        .unwrap();
    let v = sample(&state, 50.0, 0.0, 0.0);
    assert!(v.slow.kinetic >= 0.0 && v.slow.smoothed >= 0.0 && v.slow.potential >= 0.0);
    assert_eq!(v.slow.transport, 0.0);
    assert!(v.slow.remainder.abs() <= 0.1 * v.di.abs());
}

#[test]
fn solitary_tails_decay_at_the_linear_rate() {
    let law = iso();
    let c = 1.05 * law.thresholds().sonic;
    let grid = Grid::new(200.0, 2048).unwrap();
    let p = solitary_profile(c, &law, &grid).unwrap();
    let kappa = (1.0 - 1.0 / (c * c - law.k())).sqrt();
    let v = virial::evaluate(
        &Dynamics::new(law, true),
        &VirialConfig::new(50.0, 0.25, ObserverPath::stationary()).unwrap(),
        &p.state(),
        &p.phi,
        &[20.0, 25.0],
    )
    .unwrap();
    for tails in [&v.tail_nu, &v.tail_phi] {
        let rate = (tails[0] / tails[1]).ln() / 5.0;
        assert!((rate / (2.0 * kappa) - 1.0).abs() < 0.05, "rate {rate} vs {}", 2.0 * kappa);
    }
}

#[test]
fn traveling_frame_freezes_l() {
    let law = iso();
    let c = 1.05 * law.thresholds().sonic;
    let grid = Grid::new(200.0, 2048).unwrap();
    let p = solitary_profile(c, &law, &grid).unwrap();
    let v = sample(&p.state(), 50.0, 0.0, c);
    assert!(v.dl.abs() <= 1e-6 * v.localized_energy, "dL {:e}", v.dl);
}
