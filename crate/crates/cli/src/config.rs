//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use eplab_core::path::{ObserverPath, PathSample};
use eplab_core::virial::{self, Regime};
use eplab_core::{Grid, PressureLaw};

/// Every accepted key with its default; `None` marks a required key.
const KEYS: &[(&str, Option<&str>)] = &[
    ("domain.length", None),
    ("domain.points", None),
    ("pressure.kind", Some("isothermal")),
    ("pressure.k", Some("1")),
    ("pressure.gamma", Some("")),
    ("pressure.coefficient", Some("")),
    ("time.dt", Some("")),
    ("time.cfl", Some("0.4")),
    ("time.t_end", None),
    ("time.probe_stride", Some("4")),
    ("init.kind", None),
    ("init.amplitude", Some("")),
    ("init.width", Some("")),
    ("init.center", Some("0")),
    ("init.velocity", Some("still")),
    ("init.c", Some("")),
    ("init.file", Some("")),
    ("virial.A", Some("50")),
    ("virial.epsilon", Some("auto")),
    ("path.kind", Some("static")),
    ("path.y0", Some("0")),
    ("path.c", Some("")),
    ("path.file", Some("")),
    ("output.dir", Some("out")),
    ("output.tail_radii", Some("20")),
    ("checks.energy_drift", Some("1e-6")),
    ("checks.derivative_mismatch", Some("1e-6")),
    ("checks.mass_floor", Some("1e-10")),
    ("checks.min_margin_I", Some("0.02")),
    ("checks.min_margin_L", Some("0.05")),
    ("checks.avbound", Some("10")),
    ("seed", Some("0")),
];

/// Parsed but unresolved key-value pairs; later assignments win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (index, line) in text.lines().enumerate() {
            let line_no = index + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected `key = value`, got `{body}`"))?;
            let key = key.trim();
            if !KEYS.iter().any(|(k, _)| *k == key) {
                bail!("line {line_no}: unknown key `{key}`");
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            bail!("unknown key `{key}`");
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries.get(key).map(String::as_str).unwrap_or_else(|| {
            KEYS.iter()
                .find(|(k, _)| *k == key)
                .and_then(|(_, d)| *d)
                .unwrap_or("")
        })
    }

    fn number(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        let x: f64 = v.parse().map_err(|_| anyhow!("`{key}`: expected a number, got `{v}`"))?;
        if !x.is_finite() {
            bail!("`{key}` must be finite");
        }
        Ok(x)
    }

    fn optional_number(&self, key: &str) -> Result<Option<f64>> {
        if self.get(key).is_empty() {
            Ok(None)
        } else {
            self.number(key).map(Some)
        }
    }

    fn required_number(&self, key: &str, because: &str) -> Result<f64> {
        self.optional_number(key)?
            .ok_or_else(|| anyhow!("`{key}` is required {because}"))
    }

    /// Validates every value and fills defaults.
    pub fn resolve(&self, base: &Path) -> Result<RunConfig> {
        let missing: Vec<&str> = KEYS
            .iter()
            .filter(|(k, d)| d.is_none() && !self.entries.contains_key(*k))
            .map(|(k, _)| *k)
            .collect();
        if !missing.is_empty() {
            bail!("missing required keys: {}", missing.join(", "));
        }

        let length = self.number("domain.length")?;
        let points_text = self.get("domain.points");
        let points: usize = points_text
            .parse()
            .map_err(|_| anyhow!("`domain.points`: expected a positive integer, got `{points_text}`"))?;
        Grid::new(length, points).context("invalid domain")?;

        let pressure = match self.get("pressure.kind") {
            "isothermal" => PressureSpec::Isothermal {
                k: self.number("pressure.k")?,
            },
            "polytropic" => PressureSpec::Polytropic {
                gamma: self.required_number("pressure.gamma", "for a polytropic law")?,
                coefficient: self.required_number("pressure.coefficient", "for a polytropic law")?,
            },
            other => bail!("`pressure.kind` must be isothermal or polytropic, got `{other}`"),
        };
        let law = pressure.law().context("invalid pressure law")?;

        let dt = self.optional_number("time.dt")?;
        if let Some(dt) = dt {
            if dt <= 0.0 {
                bail!("`time.dt` must be positive");
            }
        }
        let cfl = self.number("time.cfl")?;
        if cfl <= 0.0 {
            bail!("`time.cfl` must be positive");
        }
        let t_end = self.number("time.t_end")?;
        if t_end < 0.0 {
            bail!("`time.t_end` must be nonnegative");
        }
        let stride_text = self.get("time.probe_stride");
        let probe_stride: usize = stride_text
            .parse()
            .ok()
            .filter(|&s| s > 0)
            .ok_or_else(|| anyhow!("`time.probe_stride` must be a positive integer, got `{stride_text}`"))?;

        let init = match self.get("init.kind") {
            kind @ ("gaussian" | "sech2") => {
                let amplitude = self.required_number("init.amplitude", "for packet data")?;
                if amplitude.abs() > 0.5 {
                    bail!("`init.amplitude` must satisfy |a| <= 0.5");
                }
                let width = self.required_number("init.width", "for packet data")?;
                if width < 4.0 * length / points as f64 {
                    bail!("`init.width` must be at least four grid spacings");
                }
                let velocity = match self.get("init.velocity") {
                    "still" => Velocity::Still,
                    "right-moving" => Velocity::RightMoving,
                    other => bail!("`init.velocity` must be still or right-moving, got `{other}`"),
                };
                InitSpec::Packet {
                    sech2: kind == "sech2",
                    amplitude,
                    width,
                    center: self.number("init.center")?,
                    velocity,
                }
            }
            "solitary" => {
                let c = self.required_number("init.c", "for solitary data")?;
                if c <= law.thresholds().sonic {
                    bail!("`init.c` must exceed the sonic speed {}", law.thresholds().sonic);
                }
                InitSpec::Solitary {
                    c,
                    center: self.number("init.center")?,
                }
            }
            "file" => {
                let file = self.get("init.file");
                if file.is_empty() {
                    bail!("`init.file` is required for file data");
                }
                InitSpec::File(base.join(file))
            }
            other => bail!("`init.kind` must be gaussian, sech2, solitary or file, got `{other}`"),
        };

        let y0 = self.number("path.y0")?;
        let path = match self.get("path.kind") {
            "static" => ObserverPath::Static { y0 },
            "constant-speed" => ObserverPath::constant_speed(y0, self.required_number("path.c", "for a constant-speed path")?)?,
            "sampled" => {
                let file = self.get("path.file");
                if file.is_empty() {
                    bail!("`path.file` is required for a sampled path");
                }
                read_path(&base.join(file))?
            }
            other => bail!("`path.kind` must be static, constant-speed or sampled, got `{other}`"),
        };

        let scale = self.number("virial.A")?;
        if scale < eplab_core::weight::MIN_SCALE {
            bail!("`virial.A` must be at least {}", eplab_core::weight::MIN_SCALE);
        }
        let thresholds = law.thresholds();
        let regime = Regime::classify(&path, &thresholds);
        let (epsilon, epsilon_auto) = match self.get("virial.epsilon") {
            "auto" => (virial::auto_epsilon(law.k(), path.sup_speed()).0, true),
            _ => (self.number("virial.epsilon")?, false),
        };
        if !(0.0..1.0).contains(&epsilon) {
            bail!("`virial.epsilon` must lie in [0, 1)");
        }

        let tail_radii = self
            .get("output.tail_radii")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite() && *r > 0.0 && *r < 0.5 * length)
                    .ok_or_else(|| anyhow!("`output.tail_radii`: `{s}` is not a radius in (0, length/2)"))
            })
            .collect::<Result<Vec<_>>>()?;

        let seed_text = self.get("seed");
        let seed: u64 = seed_text
            .parse()
            .map_err(|_| anyhow!("`seed` must be a nonnegative integer, got `{seed_text}`"))?;

        Ok(RunConfig {
            raw: self.clone(),
            base: base.to_path_buf(),
            length,
            points,
            pressure,
            dt,
            cfl,
            t_end,
            probe_stride,
            init,
            path,
            regime,
            scale,
            epsilon,
            epsilon_auto,
            output_dir: base.join(self.get("output.dir")),
            tail_radii,
            checks: Checks {
                energy_drift: self.number("checks.energy_drift")?,
                derivative_mismatch: self.number("checks.derivative_mismatch")?,
                mass_floor: self.number("checks.mass_floor")?,
                min_margin_i: self.number("checks.min_margin_I")?,
                min_margin_l: self.number("checks.min_margin_L")?,
                avbound: self.number("checks.avbound")?,
            },
            seed,
        })
    }
}

fn read_path(file: &Path) -> Result<ObserverPath> {
    let mut reader = csv::Reader::from_path(file).with_context(|| format!("reading {}", file.display()))?;
    let mut samples = Vec::new();
    for row in reader.deserialize::<(f64, f64, f64)>() {
        let (t, y, ydot) = row.with_context(|| format!("parsing {}", file.display()))?;
        samples.push(PathSample { t, y, ydot });
    }
    Ok(ObserverPath::sampled(samples)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureSpec {
    Isothermal { k: f64 },
    Polytropic { gamma: f64, coefficient: f64 },
}

impl PressureSpec {
    pub fn law(&self) -> Result<PressureLaw> {
        Ok(match *self {
            Self::Isothermal { k } => PressureLaw::isothermal(k)?,
            Self::Polytropic { gamma, coefficient } => PressureLaw::polytropic(gamma, coefficient)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Velocity {
    Still,
    RightMoving,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Packet {
        sech2: bool,
        amplitude: f64,
        width: f64,
        center: f64,
        velocity: Velocity,
    },
    Solitary {
        c: f64,
        center: f64,
    },
    /// CSV with columns `n,u`, one row per grid node.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checks {
    pub energy_drift: f64,
    pub derivative_mismatch: f64,
    pub mass_floor: f64,
    pub min_margin_i: f64,
    pub min_margin_l: f64,
    pub avbound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    raw: RawConfig,
    base: PathBuf,
    pub length: f64,
    pub points: usize,
    pub pressure: PressureSpec,
    pub dt: Option<f64>,
    pub cfl: f64,
    pub t_end: f64,
    pub probe_stride: usize,
    pub init: InitSpec,
    pub path: ObserverPath,
    pub regime: Regime,
    pub scale: f64,
    pub epsilon: f64,
    pub epsilon_auto: bool,
    pub output_dir: PathBuf,
    pub tail_radii: Vec<f64>,
    pub checks: Checks,
    pub seed: u64,
}

impl RunConfig {
    pub fn law(&self) -> PressureLaw {
        self.pressure.law().expect("validated at parse time")
    }

    /// Every key with its resolved value; parses back to the same config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (key, _) in KEYS {
            let value = match *key {
                "virial.epsilon" => format!("{}", self.epsilon),
                "output.dir" => absolute(&self.output_dir),
                "init.file" | "path.file" if !self.raw.get(key).is_empty() => {
                    absolute(&self.base.join(self.raw.get(key)))
                }
                _ => self.raw.get(key).to_string(),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

fn absolute(path: &Path) -> String {
    std::path::absolute(path)
        .unwrap_or_else(|_| path.to_path_buf())
        .display()
        .to_string()
}
