//! Subcommand bodies.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use eplab_core::estimates::{self, EstimateReport};
use eplab_core::waveforms::solitary_profile;
use eplab_core::{Grid, PressureLaw};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RawConfig, RunConfig};
use crate::run::{self, format_number, Mode, Summary};

/// Largest nodewise traveling-wave residual accepted by `solitary`.
pub const PROFILE_RESIDUAL: f64 = 1e-8;

pub enum Status {
    Pass,
    Fail(String),
}

/// Bad invocation or configuration; mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: anyhow::Error) -> anyhow::Error {
    UsageError(format!("{e:#}")).into()
}

fn load_raw(path: &Path) -> Result<(RawConfig, &Path)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    let raw = RawConfig::parse(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(usage)?;
    Ok((raw, path.parent().unwrap_or(Path::new("."))))
}

fn resolve(raw: &RawConfig, base: &Path) -> Result<RunConfig> {
    raw.resolve(base).map_err(usage)
}

/// Prints to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn status_of(summary: &Summary) -> Status {
    if summary.passed {
        Status::Pass
    } else {
        Status::Fail(summary.failed_checks.join(", "))
    }
}

pub fn single(path: &Path, mode: Mode) -> Result<Status> {
    let (raw, base) = load_raw(path)?;
    let cfg = resolve(&raw, base)?;
    let outcome = run::execute(&cfg, mode)?;
    let s = &outcome.summary;
    emit(&format!(
        "{}: {} samples, energy drift {:e}, artifacts in {}",
        if s.passed { "pass" } else { "FAIL" },
        s.samples,
        s.energy_drift,
        cfg.output_dir.display()
    ));
    Ok(status_of(s))
}

#[derive(Serialize)]
struct SolitaryReport {
    k: f64,
    c: f64,
    c_over_sonic: f64,
    length: f64,
    points: usize,
    phi_max: f64,
    amplitude: f64,
    mass_residual: f64,
    bernoulli_residual: f64,
    poisson_residual: f64,
    boundary_tail: f64,
    traveling_residual: f64,
    threshold: f64,
    passed: bool,
}

pub fn solitary(k: f64, c_over_sonic: f64, out: &Path, length: f64, points: usize) -> Result<Status> {
    let law = PressureLaw::isothermal(k).map_err(|e| usage(e.into()))?;
    let grid = Grid::new(length, points).map_err(|e| usage(e.into()))?;
    let c = c_over_sonic * law.thresholds().sonic;
    let profile = solitary_profile(c, &law, &grid)?;
    let traveling_residual = profile.traveling_residual(&law)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut writer = csv::Writer::from_path(out.join("profile.csv"))?;
    writer.write_record(["x", "n", "u", "phi"])?;
    for (j, x) in grid.nodes().into_iter().enumerate() {
        let row = [x, profile.n.values()[j], profile.u.values()[j], profile.phi.values()[j]];
        writer.write_record(row.iter().map(|&v| format_number(v)))?;
    }
    writer.flush()?;

    let r = profile.residuals;
    let report = SolitaryReport {
        k,
        c,
        c_over_sonic,
        length,
        points,
        phi_max: profile.phi_max,
        amplitude: profile.amplitude(),
        mass_residual: r.mass,
        bernoulli_residual: r.bernoulli,
        poisson_residual: r.poisson,
        boundary_tail: r.tail,
        traveling_residual,
        threshold: PROFILE_RESIDUAL,
        passed: traveling_residual <= PROFILE_RESIDUAL,
    };
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(out.join("report.json"), json.clone() + "\n")?;
    emit(&json);
    Ok(if report.passed {
        Status::Pass
    } else {
        Status::Fail(format!("traveling residual {traveling_residual:e} > {PROFILE_RESIDUAL:e}"))
    })
}

#[derive(Serialize)]
struct EstimateVerdict {
    commutator_bound: bool,
    derivative_constant_at_most_20: bool,
    conjugated_constant_at_most_10: bool,
    positivity: bool,
    solver_agreement: bool,
    norm_equivalence: bool,
}

#[derive(Serialize)]
struct EstimateOutput {
    passed: bool,
    verdict: EstimateVerdict,
    report: EstimateReport,
}

pub fn poisson_test(samples: usize, seed: u64, out: Option<&Path>) -> Result<Status> {
    if samples == 0 {
        return Err(UsageError("--samples must be positive".into()).into());
    }
    let report = estimates::run(samples, seed)?;
    let (r, p) = (&report.resolvent, &report.poisson);
    let verdict = EstimateVerdict {
        commutator_bound: r.commutator_ok(),
        derivative_constant_at_most_20: r.derivative_constant <= 20.0,
        conjugated_constant_at_most_10: r.conjugated_constant <= 10.0,
        positivity: r.positivity_ok(),
        solver_agreement: p.max_disagreement <= 1e-10,
        norm_equivalence: p.min_ratio >= 0.5 && p.max_ratio <= 2.0,
    };
    let passed = verdict.commutator_bound
        && verdict.derivative_constant_at_most_20
        && verdict.conjugated_constant_at_most_10
        && verdict.positivity
        && verdict.solver_agreement
        && verdict.norm_equivalence;
    let output = EstimateOutput { passed, verdict, report };
    let json = serde_json::to_string_pretty(&output)?;
    if let Some(path) = out {
        fs::write(path, json.clone() + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    emit(&json);
    Ok(if passed {
        Status::Pass
    } else {
        Status::Fail("randomized estimate suite".into())
    })
}

pub fn sweep(key: &str, values: &[String], mode: Mode, path: &Path) -> Result<Status> {
    let (raw, base) = load_raw(path)?;
    let root = resolve(&raw, base)?.output_dir;
    let members = values
        .iter()
        .map(|value| {
            let mut member = raw.clone();
            member.set(key, value).map_err(usage)?;
            let dir = root.join(format!("{key}={value}"));
            member.set("output.dir", &dir.display().to_string()).map_err(usage)?;
            resolve(&member, base)
        })
        .collect::<Result<Vec<_>>>()?;

    let outcomes: Vec<Result<Summary>> = members
        .par_iter()
        .map(|cfg| run::execute(cfg, mode).map(|o| o.summary))
        .collect();

    fs::create_dir_all(&root)?;
    let mut writer = csv::Writer::from_path(root.join("sweep.csv"))?;
    writer.write_record([
        "key",
        "value",
        "passed",
        "energy_drift",
        "min_margin_I",
        "max_margin_I",
        "min_margin_L",
        "max_margin_L",
        "avbound",
        "avbound2",
        "error",
    ])?;
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    let mut failures = Vec::new();
    for (value, outcome) in values.iter().zip(&outcomes) {
        let row = match outcome {
            Ok(s) => {
                if !s.passed {
                    failures.push(format!("{key}={value}: {}", s.failed_checks.join(", ")));
                }
                vec![
                    key.to_string(),
                    value.clone(),
                    s.passed.to_string(),
                    format_number(s.energy_drift),
                    opt(s.min_margin_i),
                    opt(s.max_margin_i),
                    opt(s.min_margin_l),
                    opt(s.max_margin_l),
                    opt(s.avbound_constant),
                    opt(s.avbound2_constant),
                    s.error.clone().unwrap_or_default(),
                ]
            }
            Err(e) => {
                failures.push(format!("{key}={value}: {e:#}"));
                let mut row = vec![key.to_string(), value.clone(), "false".into()];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(format!("{e:#}"));
                row
            }
        };
        writer.write_record(&row)?;
    }
    writer.flush()?;
    emit(&format!(
        "sweep over {key}: {} members, table in {}",
        values.len(),
        root.join("sweep.csv").display()
    ));
    Ok(if failures.is_empty() {
        Status::Pass
    } else {
        Status::Fail(failures.join("; "))
    })
}
