//! Taylor-remainder and sign properties of the constitutive functions.

use eplab_core::constitutive::{big_q, big_r, q};
use eplab_core::PressureLaw;
use proptest::prelude::*;

/// `sup_{|n| <= 1/2} |f(n)|` sampled finely.
fn sup_half(f: impl Fn(f64) -> f64) -> f64 {
    (0..=2000).map(|i| f(-0.5 + i as f64 / 2000.0).abs()).fold(0.0, f64::max)
}

fn polytropic_w2(gamma: f64, kp: f64) -> impl Fn(f64) -> f64 {
    move |n| kp * gamma * (gamma - 2.0) * (1.0 + n).powf(gamma - 3.0)
}

fn polytropic_w3(gamma: f64, kp: f64) -> impl Fn(f64) -> f64 {
    move |n| kp * gamma * (gamma - 2.0) * (gamma - 3.0) * (1.0 + n).powf(gamma - 4.0)
}

proptest! {
    #[test]
    fn isothermal_taylor_remainders(k in 0.05f64..5.0, n in -0.5f64..0.5) {
        let law = PressureLaw::isothermal(k).unwrap();
        // w'' = -k/(1+n)^2, W''' = w'', S''' = -2k/(1+n)^3 on |n| <= 1/2.
        prop_assert!((law.w(n).unwrap() - k * n).abs() <= 0.5 * 4.0 * k * n * n + 1e-15);
        prop_assert!((law.big_w(n).unwrap() - 0.5 * k * n * n).abs() <= 4.0 * k / 6.0 * n.abs().powi(3) + 1e-15);
        prop_assert!((law.s(n).unwrap() - 0.5 * k * n * n).abs() <= 16.0 * k / 6.0 * n.abs().powi(3) + 1e-15);
    }

    #[test]
    fn polytropic_taylor_remainders(gamma in 1.1f64..3.0, kp in 0.1f64..2.0, n in -0.5f64..0.5) {
        let law = PressureLaw::polytropic(gamma, kp).unwrap();
        let k = law.k();
        let w2 = polytropic_w2(gamma, kp);
        let w3 = polytropic_w3(gamma, kp);
        let c_w = 0.5 * sup_half(&w2);
        let c_big_w = sup_half(&w2) / 6.0;
        let c_s = sup_half(|m| 2.0 * w2(m) + m * w3(m)) / 6.0;
        prop_assert!((law.w(n).unwrap() - k * n).abs() <= c_w * n * n * (1.0 + 1e-9) + 1e-14);
        prop_assert!((law.big_w(n).unwrap() - 0.5 * k * n * n).abs() <= c_big_w * n.abs().powi(3) * (1.0 + 1e-9) + 1e-14);
        prop_assert!((law.s(n).unwrap() - 0.5 * k * n * n).abs() <= c_s * n.abs().powi(3) * (1.0 + 1e-9) + 1e-14);
    }

    #[test]
    fn electron_taylor_remainders(phi in -0.5f64..0.5) {
        // Q''' = e^phi, R''' = (2 + phi) e^phi.
        let e_half = 0.5f64.exp();
        prop_assert!((big_q(phi) - 0.5 * phi * phi).abs() <= e_half / 6.0 * phi.abs().powi(3) + 1e-17);
        prop_assert!((big_r(phi) - 0.5 * phi * phi).abs() <= 2.5 * e_half / 6.0 * phi.abs().powi(3) + 1e-17);
        prop_assert!((q(phi) - phi).abs() <= 0.5 * e_half * phi * phi + 1e-17);
    }

    #[test]
    fn potentials_are_nonnegative(k in 0.05f64..5.0, gamma in 1.1f64..3.0, n in -0.9f64..5.0, phi in -5.0f64..5.0) {
        for law in [PressureLaw::isothermal(k).unwrap(), PressureLaw::polytropic(gamma, k / gamma).unwrap()] {
            let (w, s) = law.big_w_and_s(n).unwrap();
            prop_assert!(w >= 0.0 && s >= 0.0);
            if n != 0.0 {
                prop_assert!(w > 0.0);
            }
        }
        prop_assert!(big_r(phi) >= 0.0);
        prop_assert!(big_q(phi) >= 0.0);
    }

    #[test]
    fn thresholds_are_ordered(k in 1e-6f64..100.0) {
        let t = PressureLaw::isothermal(k).unwrap().thresholds();
        prop_assert!(t.slow < t.sonic);
        prop_assert!((t.sonic * t.sonic - 1.0 - k).abs() <= 1e-12 * (1.0 + k));
    }
}

#[test]
fn pressure_hypotheses_sampled() {
    for law in [PressureLaw::isothermal(1.0).unwrap(), PressureLaw::polytropic(5.0 / 3.0, 0.6).unwrap()] {
        let mut prev = 0.0;
        for i in 0..=990 {
            let rho = 0.1 + i as f64 * 0.01;
            let dp = law.dp(rho);
            assert!(dp > 0.0 && dp >= prev - 1e-15);
            prev = dp;
        }
        assert!((law.dp(1.0) - law.k()).abs() < 1e-15);
    }
}
