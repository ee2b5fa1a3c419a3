//! Single runs: initial data, integration, artifacts and checks.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use eplab_core::dynamics::{Dynamics, State, StepperConfig};
use eplab_core::record::{RunRecord, VirialProbe};
use eplab_core::virial::{Regime, VirialConfig, VirialSample};
use eplab_core::waveforms::{solitary_profile, Packet, PacketShape, VelocityMode};
use eplab_core::{Field, Grid};
use serde::Serialize;

use crate::config::{InitSpec, RunConfig, Velocity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    VirialSlow,
    VirialFast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub threshold: f64,
    /// `"max"` when the value must not exceed the threshold, `"min"` otherwise.
    pub bound: &'static str,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: Option<f64>, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            bound: "max",
            passed: value.is_some_and(|v| v <= threshold),
        }
    }

    /// A missing value (no sample above the mass floor) passes vacuously.
    fn at_least(name: &str, value: Option<f64>, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            bound: "min",
            passed: value.is_none_or(|v| v >= threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeMismatch {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    pub passed: bool,
    pub failed_checks: Vec<String>,
    pub error: Option<String>,
    pub regime: Regime,
    pub scale: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub steps: usize,
    pub samples: usize,
    pub t_final: f64,
    pub energy_initial: f64,
    pub energy_drift: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub derivative_mismatch: DerivativeMismatch,
    pub min_energy_density: f64,
    pub min_margin_i: Option<f64>,
    pub max_margin_i: Option<f64>,
    pub min_margin_l: Option<f64>,
    pub max_margin_l: Option<f64>,
    pub avbound_constant: Option<f64>,
    pub avbound2_constant: Option<f64>,
    pub sup_n_l2: f64,
    pub sup_u_l2: f64,
    pub checks: Vec<Check>,
}

pub struct Outcome {
    pub summary: Summary,
}

pub fn initial_state(cfg: &RunConfig, grid: &Grid) -> Result<State> {
    let law = cfg.law();
    Ok(match &cfg.init {
        InitSpec::Packet {
            sech2,
            amplitude,
            width,
            center,
            velocity,
        } => Packet {
            shape: if *sech2 { PacketShape::Sech2 } else { PacketShape::Gaussian },
            amplitude: *amplitude,
            width: *width,
            center: *center,
            velocity: match velocity {
                Velocity::Still => VelocityMode::Still,
                Velocity::RightMoving => VelocityMode::RightMoving,
            },
        }
        .state(grid, &law)?,
        InitSpec::Solitary { c, center } => {
            let p = solitary_profile(*c, &law, grid)?;
            State::new(p.n.shifted(*center), p.u.shifted(*center), 0.0)
        }
        InitSpec::File(path) => {
            let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
            let (mut n, mut u) = (Vec::new(), Vec::new());
            for row in reader.deserialize::<(f64, f64)>() {
                let (a, b) = row.with_context(|| format!("parsing {}", path.display()))?;
                n.push(a);
                u.push(b);
            }
            if n.len() != grid.points() {
                bail!("{} has {} rows, expected {}", path.display(), n.len(), grid.points());
            }
            State::new(Field::new(grid, n), Field::new(grid, u), 0.0)
        }
    })
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e6)`.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn series_header(tail_radii: &[f64]) -> Vec<String> {
    let mut header: Vec<String> = [
        "t", "E", "mass", "J", "K", "I", "L", "dJdt_a", "dKdt_a", "dIdt_a", "dLdt_a", "dJdt_n", "dKdt_n", "dIdt_n",
        "dLdt_n", "loc_mass",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(tail_radii.iter().map(|r| format!("tail_nu_{r}")));
    header.extend(tail_radii.iter().map(|r| format!("tail_phi_{r}")));
    header
}

fn write_series(path: &Path, record: &RunRecord) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(series_header(&record.tail_radii))?;
    let numeric = [
        record.numeric_derivative(|s| s.j),
        record.numeric_derivative(|s| s.k),
        record.numeric_derivative(|s| s.i),
        record.numeric_derivative(|s| s.l),
    ];
    for (idx, s) in record.samples.iter().enumerate() {
        let mut row = vec![s.t, s.energy, s.mass, s.j, s.k, s.i, s.l, s.dj, s.dk, s.di, s.dl];
        row.extend(numeric.iter().map(|d| d[idx]));
        row.push(s.localized_mass);
        row.extend(&s.tail_nu);
        row.extend(&s.tail_phi);
        writer.write_record(row.iter().map(|&v| format_number(v)))?;
    }
    writer.flush()?;
    Ok(())
}

fn summarize(cfg: &RunConfig, mode: Mode, record: &RunRecord, dt: f64, steps: usize, error: Option<String>) -> Summary {
    let sonic = cfg.law().thresholds().sonic;
    let floor = cfg.checks.mass_floor;
    let mismatch = |v: fn(&VirialSample) -> f64, a: fn(&VirialSample) -> f64| record.derivative_mismatch(v, a);
    let derivative_mismatch = DerivativeMismatch {
        j: mismatch(|s| s.j, |s| s.dj),
        k: mismatch(|s| s.k, |s| s.dk),
        i: mismatch(|s| s.i, |s| s.di),
        l: mismatch(|s| s.l, |s| s.dl),
    };
    let slow = record.slow_margin_range(floor);
    let fast = record.fast_margin_range(floor);
    let t_final = record.samples.last().map_or(0.0, |s| s.t);
    let avbound_constant = record.avbound_constant(cfg.scale, 0.0, t_final);
    let avbound2_constant = record.avbound2_constant(cfg.scale, cfg.path.inf_speed(), sonic);
    let min_energy_density = record
        .samples
        .iter()
        .map(|s| s.min_energy_density)
        .fold(f64::INFINITY, f64::min);

    let c = &cfg.checks;
    let mut checks = vec![
        Check::at_most("integration", Some(if error.is_some() { 1.0 } else { 0.0 }), 0.0),
        Check::at_most("energy_drift", Some(record.energy_drift()), c.energy_drift),
        Check::at_most("derivative_mismatch_J", Some(derivative_mismatch.j), c.derivative_mismatch),
        Check::at_most("derivative_mismatch_K", Some(derivative_mismatch.k), c.derivative_mismatch),
        Check::at_most("derivative_mismatch_I", Some(derivative_mismatch.i), c.derivative_mismatch),
        Check::at_most("derivative_mismatch_L", Some(derivative_mismatch.l), c.derivative_mismatch),
        Check::at_least("energy_density_nonnegative", Some(min_energy_density.min(0.0)), 0.0),
    ];
    let regime_check = |want: Regime| Check {
        name: format!("regime_{want:?}").to_lowercase(),
        value: None,
        threshold: 0.0,
        bound: "min",
        passed: cfg.regime == want,
    };
    match mode {
        Mode::Simulate => {}
        Mode::VirialSlow => {
            checks.push(regime_check(Regime::Slow));
            checks.push(Check::at_least("min_margin_I", slow.map(|r| r.0), c.min_margin_i));
            checks.push(Check::at_most("avbound", avbound_constant.or(Some(0.0)), c.avbound));
        }
        Mode::VirialFast => {
            checks.push(regime_check(Regime::Fast));
            checks.push(Check::at_least("min_margin_L", fast.map(|r| r.0), c.min_margin_l));
            checks.push(Check::at_most("avbound2", avbound2_constant.or(Some(0.0)), c.avbound));
        }
    }
    let failed_checks: Vec<String> = checks.iter().filter(|k| !k.passed).map(|k| k.name.clone()).collect();

    Summary {
        mode,
        passed: failed_checks.is_empty(),
        failed_checks,
        error,
        regime: cfg.regime,
        scale: cfg.scale,
        epsilon: cfg.epsilon,
        dt,
        steps,
        samples: record.len(),
        t_final,
        energy_initial: record.samples.first().map_or(0.0, |s| s.energy),
        energy_drift: record.energy_drift(),
        mass_drift: record.mass_drift(),
        momentum_drift: record.momentum_drift(),
        derivative_mismatch,
        min_energy_density: if record.is_empty() { 0.0 } else { min_energy_density },
        min_margin_i: slow.map(|r| r.0),
        max_margin_i: slow.map(|r| r.1),
        min_margin_l: fast.map(|r| r.0),
        max_margin_l: fast.map(|r| r.1),
        avbound_constant,
        avbound2_constant,
        sup_n_l2: record.sup_n_l2(),
        sup_u_l2: record.sup_u_l2(),
        checks,
    }
}

/// Runs `cfg`, writing `config.echo`, `series.csv` and `summary.json` into
/// its output directory. A run that aborts mid-way still writes the samples
/// gathered so far.
pub fn execute(cfg: &RunConfig, mode: Mode) -> Result<Outcome> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.echo"), cfg.echo())?;

    let grid = Grid::new(cfg.length, cfg.points)?;
    let law = cfg.law();
    let s0 = initial_state(cfg, &grid)?;
    let dynamics = Dynamics::new(law, true);
    let virial_cfg = VirialConfig::new(cfg.scale, cfg.epsilon, cfg.path.clone())?;
    let stepper = StepperConfig {
        dt: cfg.dt,
        cfl: cfg.cfl,
        t_end: cfg.t_end,
        dealias: true,
        probe_stride: cfg.probe_stride,
    };
    let mut probe = VirialProbe::new(virial_cfg, cfg.tail_radii.clone());
    let run = dynamics.integrate(s0, &stepper, &mut [&mut probe])?;
    let record = probe.into_record();

    write_series(&dir.join("series.csv"), &record)?;
    let summary = summarize(cfg, mode, &record, run.dt, run.steps, run.error.map(|e| e.to_string()));
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(Outcome { summary })
}
