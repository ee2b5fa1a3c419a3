//! Observer paths `y(t)` that center the virial weights.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error("sampled path needs at least two samples")]
    TooFewSamples,
    #[error("sample times must be strictly increasing (at index {0})")]
    NonMonotone(usize),
    #[error("non-finite path parameter")]
    NonFinite,
}

/// One row of a sampled path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub y: f64,
    pub ydot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObserverPath {
    Static { y0: f64 },
    ConstantSpeed { y0: f64, c: f64 },
    /// Piecewise cubic Hermite through `(t, y, ydot)`; linear beyond the ends.
    Sampled { samples: Vec<PathSample> },
}

impl ObserverPath {
    pub fn stationary() -> Self {
        Self::Static { y0: 0.0 }
    }

    pub fn constant_speed(y0: f64, c: f64) -> Result<Self, PathError> {
        if !(y0.is_finite() && c.is_finite()) {
            return Err(PathError::NonFinite);
        }
        Ok(Self::ConstantSpeed { y0, c })
    }

    pub fn sampled(samples: Vec<PathSample>) -> Result<Self, PathError> {
        if samples.len() < 2 {
            return Err(PathError::TooFewSamples);
        }
        if samples.iter().any(|s| !(s.t.is_finite() && s.y.is_finite() && s.ydot.is_finite())) {
            return Err(PathError::NonFinite);
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(PathError::NonMonotone(i + 1));
        }
        Ok(Self::Sampled { samples })
    }

    /// `(y(t), y'(t))`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        match self {
            Self::Static { y0 } => (*y0, 0.0),
            Self::ConstantSpeed { y0, c } => (y0 + c * t, *c),
            Self::Sampled { samples } => hermite(samples, t),
        }
    }

    pub fn position(&self, t: f64) -> f64 {
        self.at(t).0
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.at(t).1
    }

    /// `sup |y'|` over the path (over the sampled range for sampled paths).
    pub fn sup_speed(&self) -> f64 {
        self.speeds().fold(0.0, f64::max)
    }

    /// `inf |y'|` over the path.
    pub fn inf_speed(&self) -> f64 {
        self.speeds().fold(f64::INFINITY, f64::min)
    }

    fn speeds(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            Self::Static { .. } => Box::new(std::iter::once(0.0)),
            Self::ConstantSpeed { c, .. } => Box::new(std::iter::once(c.abs())),
            Self::Sampled { samples } => Box::new(samples.windows(2).flat_map(move |w| {
                (0..=32).map(move |i| {
                    let t = w[0].t + (w[1].t - w[0].t) * i as f64 / 32.0;
                    hermite(samples, t).1.abs()
                })
            })),
        }
    }
}

fn hermite(samples: &[PathSample], t: f64) -> (f64, f64) {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if t <= first.t {
        return (first.y + first.ydot * (t - first.t), first.ydot);
    }
    if t >= last.t {
        return (last.y + last.ydot * (t - last.t), last.ydot);
    }
    let i = samples.partition_point(|s| s.t <= t) - 1;
    let (a, b) = (samples[i], samples[i + 1]);
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let (s2, s3) = (s * s, s * s * s);
    let y = (2.0 * s3 - 3.0 * s2 + 1.0) * a.y
        + (s3 - 2.0 * s2 + s) * h * a.ydot
        + (-2.0 * s3 + 3.0 * s2) * b.y
        + (s3 - s2) * h * b.ydot;
    let dy = ((6.0 * s2 - 6.0 * s) * a.y + (-6.0 * s2 + 6.0 * s) * b.y) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * a.ydot
        + (3.0 * s2 - 2.0 * s) * b.ydot;
    (y, dy)
}
