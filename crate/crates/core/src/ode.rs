//! Dormand-Prince 5(4) adaptive integrator for small fixed-size systems.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError<E> {
    #[error("right-hand side failed: {0}")]
    Rhs(E),
    #[error("step size underflow at x = {0}")]
    StepUnderflow(f64),
    #[error("too many steps between {from} and {to}")]
    TooManySteps { from: f64, to: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const D: usize> {
    pub y: [f64; D],
    /// Suggested size for the next step.
    pub next_step: f64,
    pub accepted: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 100_000;

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction), landing
/// exactly on `x1`.
pub fn integrate<const D: usize, E2>(
    mut f: impl FnMut(f64, &[f64; D]) -> Result<[f64; D], E2>,
    x0: f64,
    y0: [f64; D],
    x1: f64,
    first_step: f64,
    tol: Tolerance,
) -> Result<Outcome<D>, OdeError<E2>> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(Outcome {
            y: y0,
            next_step: first_step,
            accepted: 0,
        });
    }
    let dir = span.signum();
    let mut h = first_step.abs().min(span.abs()).max(1e-14 * span.abs()) * dir;
    let mut x = x0;
    let mut y = y0;
    let mut accepted = 0;
    let mut k = [[0.0; D]; 7];
    k[0] = f(x, &y).map_err(OdeError::Rhs)?;

    for _ in 0..MAX_STEPS {
        let remaining = x1 - x;
        let last = (h.abs() >= remaining.abs()) || (remaining.abs() - h.abs()).abs() <= 1e-14 * span.abs();
        let h_try = if last { remaining } else { h };

        for s in 1..7 {
            let mut ys = y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (r, kr) in k.iter().enumerate().take(s) {
                    acc += A[s][r] * kr[i];
                }
                *yi += h_try * acc;
            }
            k[s] = f(x + C[s] * h_try, &ys).map_err(OdeError::Rhs)?;
        }
        let mut y_new = y;
        for (i, yi) in y_new.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (r, kr) in k.iter().enumerate().take(6) {
                acc += A[6][r] * kr[i];
            }
            *yi += h_try * acc;
        }
        // k[6] is the derivative at the new point (first-same-as-last).
        let mut err_sq = 0.0;
        for i in 0..D {
            let mut e = 0.0;
            for (r, kr) in k.iter().enumerate() {
                e += E[r] * kr[i];
            }
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (h_try * e / scale).powi(2);
        }
        let err = (err_sq / D as f64).sqrt();
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            x = if last { x1 } else { x + h_try };
            y = y_new;
            k[0] = k[6];
            accepted += 1;
            if last {
                return Ok(Outcome {
                    y,
                    next_step: h.abs().max((h_try * factor).abs()),
                    accepted,
                });
            }
            h = h_try * factor;
        } else {
            h = h_try * factor.min(1.0);
            if h.abs() < 1e-14 * (1.0 + x.abs()) {
                return Err(OdeError::StepUnderflow(x));
            }
        }
    }
    Err(OdeError::TooManySteps { from: x0, to: x1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let tol = Tolerance {
            rtol: 1e-12,
            atol: 1e-14,
        };
        let out = integrate(
            |_, y: &[f64; 2]| Ok::<_, ()>([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            10.0,
            0.1,
            tol,
        )
        .unwrap();
        assert!((out.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((out.y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn integrates_backwards() {
        let tol = Tolerance {
            rtol: 1e-12,
            atol: 1e-14,
        };
        let out = integrate(|_, y: &[f64; 1]| Ok::<_, ()>([y[0]]), 1.0, [1.0], 0.0, 0.1, tol).unwrap();
        assert!((out.y[0] - (-1f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn propagates_rhs_errors() {
        let tol = Tolerance {
            rtol: 1e-8,
            atol: 1e-10,
        };
        let r = integrate(
            |x, y: &[f64; 1]| if x > 0.5 { Err("boom") } else { Ok([y[0]]) },
            0.0,
            [1.0],
            1.0,
            0.1,
            tol,
        );
        assert!(matches!(r, Err(OdeError::Rhs("boom"))));
    }
}
