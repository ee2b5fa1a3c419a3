//! Time series of virial samples collected during a run.

use serde::Serialize;

use crate::dynamics::{Probe, Snapshot};
use crate::virial::{self, VirialConfig, VirialSample};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunRecord {
    pub tail_radii: Vec<f64>,
    pub samples: Vec<VirialSample>,
}

impl RunRecord {
    pub fn new(tail_radii: Vec<f64>) -> Self {
        Self {
            tail_radii,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Centered differences of a sampled quantity; `NaN` at both ends.
    pub fn numeric_derivative(&self, f: impl Fn(&VirialSample) -> f64) -> Vec<f64> {
        let n = self.samples.len();
        (0..n)
            .map(|i| {
                if i == 0 || i + 1 >= n {
                    f64::NAN
                } else {
                    let (a, b) = (&self.samples[i - 1], &self.samples[i + 1]);
                    (f(b) - f(a)) / (b.t - a.t)
                }
            })
            .collect()
    }

    /// `max_i |numeric - analytic| / max(1, |analytic|)` over interior samples.
    pub fn derivative_mismatch(
        &self,
        value: impl Fn(&VirialSample) -> f64,
        analytic: impl Fn(&VirialSample) -> f64,
    ) -> f64 {
        self.numeric_derivative(value)
            .iter()
            .zip(&self.samples)
            .filter(|(d, _)| d.is_finite())
            .map(|(d, s)| {
                let a = analytic(s);
                (d - a).abs() / a.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `max |E(t) - E(0)| / E(0)`; zero when the energy vanishes identically.
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|s| s.energy))
    }

    /// `max |int n(t) - int n(0)|`.
    pub fn mass_drift(&self) -> f64 {
        absolute_drift(self.samples.iter().map(|s| s.mass))
    }

    /// `max |int n u (t) - int n u (0)|`.
    pub fn momentum_drift(&self) -> f64 {
        absolute_drift(self.samples.iter().map(|s| s.momentum))
    }

    /// Trapezoid integral of the localized mass over `[t0, t1]` (samples
    /// inside the window only).
    pub fn integrated_localized_mass(&self, t0: f64, t1: f64) -> f64 {
        let inside: Vec<&VirialSample> = self.samples.iter().filter(|s| s.t >= t0 && s.t <= t1).collect();
        inside
            .windows(2)
            .map(|w| 0.5 * (w[0].localized_mass + w[1].localized_mass) * (w[1].t - w[0].t))
            .sum()
    }

    pub fn sup_n_l2(&self) -> f64 {
        self.samples.iter().map(|s| s.n_l2).fold(0.0, f64::max)
    }

    pub fn sup_u_l2(&self) -> f64 {
        self.samples.iter().map(|s| s.u_l2).fold(0.0, f64::max)
    }

    /// Extremes of the slow margin over samples with localized mass at
    /// least `floor`.
    pub fn slow_margin_range(&self, floor: f64) -> Option<(f64, f64)> {
        range(self.samples.iter().filter(|s| s.localized_mass >= floor).filter_map(|s| s.slow_margin()))
    }

    pub fn fast_margin_range(&self, floor: f64) -> Option<(f64, f64)> {
        range(self.samples.iter().filter(|s| s.localized_mass >= floor).filter_map(|s| s.fast_margin()))
    }

    /// `int_{t0}^{t1} loc_mass dt / (A sup ||u|| sup ||n||)`, sups over the
    /// same window.
    pub fn avbound_constant(&self, scale: f64, t0: f64, t1: f64) -> Option<f64> {
        let inside = || self.samples.iter().filter(|s| s.t >= t0 && s.t <= t1);
        let sup_u = inside().map(|s| s.u_l2).fold(0.0, f64::max);
        let sup_n = inside().map(|s| s.n_l2).fold(0.0, f64::max);
        let denom = scale * sup_u * sup_n;
        (denom > 0.0).then(|| self.integrated_localized_mass(t0, t1) / denom)
    }

    /// `int loc_mass dt * (inf |y'| - sonic) / (A E(0))`.
    pub fn avbound2_constant(&self, scale: f64, inf_speed: f64, sonic: f64) -> Option<f64> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        let gap = inf_speed - sonic;
        let denom = scale * first.energy;
        (gap > 0.0 && denom > 0.0).then(|| self.integrated_localized_mass(first.t, last.t) * gap / denom)
    }
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let Some(&first) = values.first() else {
        return 0.0;
    };
    let worst = values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
    if worst == 0.0 {
        0.0
    } else {
        worst / first.abs()
    }
}

fn absolute_drift(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let Some(&first) = values.first() else {
        return 0.0;
    };
    values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max)
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Probe that evaluates the virial quantities at every sample.
#[derive(Debug, Clone)]
pub struct VirialProbe {
    pub config: VirialConfig,
    pub record: RunRecord,
}

impl VirialProbe {
    pub fn new(config: VirialConfig, tail_radii: Vec<f64>) -> Self {
        Self {
            config,
            record: RunRecord::new(tail_radii),
        }
    }

    pub fn into_record(self) -> RunRecord {
        self.record
    }
}

impl Probe for VirialProbe {
    fn sample(&mut self, snapshot: &Snapshot<'_>) -> Result<(), String> {
        let sample = virial::evaluate(
            snapshot.dynamics,
            &self.config,
            snapshot.state,
            snapshot.phi,
            &self.record.tail_radii,
        )
        .map_err(|e| e.to_string())?;
        self.record.samples.push(sample);
        Ok(())
    }
}
