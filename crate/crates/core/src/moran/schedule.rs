//! The sampling schedule `φ`: resampling happens at rate proportional to
//! `1/φ(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Linear in `ln φ`.
    LogLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `φ ≡ c`
    Constant { c: f64 },
    /// `φ(t) = e^{βt}`
    Exponential { beta: f64 },
    /// `φ(t) = 1 + t^n`
    Polynomial { n: f64 },
    /// Interpolated table of `(t, φ(t))`, held constant outside its range.
    Tabulated {
        points: Vec<(f64, f64)>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleKind", into = "ScheduleKind")]
pub struct SamplingSchedule {
    kind: ScheduleKind,
    nondecreasing: bool,
}

impl TryFrom<ScheduleKind> for SamplingSchedule {
    type Error = Error;

    fn try_from(kind: ScheduleKind) -> Result<Self> {
        Self::new(kind)
    }
}

impl From<SamplingSchedule> for ScheduleKind {
    fn from(s: SamplingSchedule) -> Self {
        s.kind
    }
}

impl SamplingSchedule {
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        let nondecreasing = match &kind {
            ScheduleKind::Constant { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::param("c", format!("{c} must be positive")));
                }
                true
            }
            ScheduleKind::Exponential { beta } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::param("beta", format!("{beta} must be positive")));
                }
                true
            }
            ScheduleKind::Polynomial { n } => {
                if !(*n > 0.0 && n.is_finite()) {
                    return Err(Error::param("n", format!("{n} must be positive")));
                }
                true
            }
            ScheduleKind::Tabulated { points, .. } => {
                if points.is_empty() {
                    return Err(Error::param("points", "table is empty"));
                }
                if let Some(w) = points.windows(2).find(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::param(
                        "points",
                        format!("table times not increasing at {} -> {}", w[0].0, w[1].0),
                    ));
                }
                if let Some(p) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
                    return Err(Error::param(
                        "points",
                        format!("phi({}) = {} is not positive", p.0, p.1),
                    ));
                }
                points.windows(2).all(|w| w[1].1 >= w[0].1)
            }
        };
        Ok(Self {
            kind,
            nondecreasing,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(ScheduleKind::Constant { c })
    }

    pub fn exponential(beta: f64) -> Result<Self> {
        Self::new(ScheduleKind::Exponential { beta })
    }

    pub fn polynomial(n: f64) -> Result<Self> {
        Self::new(ScheduleKind::Polynomial { n })
    }

    pub fn tabulated(points: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        Self::new(ScheduleKind::Tabulated {
            points,
            interpolation,
        })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.nondecreasing
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ScheduleKind::Constant { c } => format!("phi(t) = {c}"),
            ScheduleKind::Exponential { beta } => format!("phi(t) = exp({beta} t)"),
            ScheduleKind::Polynomial { n } => format!("phi(t) = 1 + t^{n}"),
            ScheduleKind::Tabulated { points, .. } => {
                format!("phi tabulated at {} points", points.len())
            }
        }
    }

    /// `φ(t)`; may overflow to `+∞` for fast-growing schedules, which is a
    /// valid (zero) resampling rate.
    pub fn evaluate(&self, t: f64) -> f64 {
        match &self.kind {
            ScheduleKind::Constant { c } => *c,
            ScheduleKind::Exponential { beta } => (beta * t).exp(),
            ScheduleKind::Polynomial { n } => 1.0 + t.max(0.0).powf(*n),
            ScheduleKind::Tabulated {
                points,
                interpolation,
            } => tabulated(points, *interpolation, t),
        }
    }

    /// `ln φ(t)`, finite even where `φ(t)` overflows.
    pub fn ln_evaluate(&self, t: f64) -> f64 {
        match &self.kind {
            ScheduleKind::Exponential { beta } => beta * t,
            ScheduleKind::Polynomial { n } => {
                let ln_tn = n * t.max(0.0).ln();
                // ln(1 + e^{ln_tn})
                if ln_tn > 0.0 {
                    ln_tn + (-ln_tn).exp().ln_1p()
                } else {
                    ln_tn.exp().ln_1p()
                }
            }
            _ => self.evaluate(t).ln(),
        }
    }

    /// `min_{[a, b]} φ`.
    pub fn min_on(&self, a: f64, b: f64) -> Result<f64> {
        if !(b >= a) {
            return Err(Error::EnvelopeUnavailable {
                start: a,
                end: b,
                reason: "empty window".into(),
            });
        }
        let m = if self.nondecreasing {
            self.evaluate(a)
        } else {
            match &self.kind {
                ScheduleKind::Tabulated { points, .. } => {
                    // Each segment is monotone, so the minimum sits at a node
                    // or at a window end.
                    points
                        .iter()
                        .filter(|p| p.0 > a && p.0 < b)
                        .map(|p| p.1)
                        .fold(self.evaluate(a).min(self.evaluate(b)), f64::min)
                }
                _ => self.evaluate(a),
            }
        };
        if !(m > 0.0) {
            return Err(Error::EnvelopeUnavailable {
                start: a,
                end: b,
                reason: format!("phi is not bounded below by a positive number ({m})"),
            });
        }
        Ok(m)
    }

    /// `∫_a^b ds / φ(s)`.
    pub fn inverse_rate_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(b >= a) {
            return Err(Error::param("b", format!("interval [{a}, {b}] is reversed")));
        }
        if a == b {
            return Ok(0.0);
        }
        match &self.kind {
            ScheduleKind::Constant { c } => Ok((b - a) / c),
            ScheduleKind::Exponential { beta } => {
                Ok(((-beta * a).exp() - (-beta * b).exp()) / beta)
            }
            ScheduleKind::Polynomial { .. } => {
                let v = integrate(
                    |s| (-self.ln_evaluate(s)).exp(),
                    a,
                    b,
                    16,
                    &Tolerance::with_rel(1e-12),
                )?;
                Ok(v.value)
            }
            ScheduleKind::Tabulated { points, .. } => {
                let mut breaks = vec![a];
                breaks.extend(points.iter().map(|p| p.0).filter(|&t| t > a && t < b));
                breaks.push(b);
                let mut total = 0.0;
                for w in breaks.windows(2) {
                    total += integrate(
                        |s| 1.0 / self.evaluate(s),
                        w[0],
                        w[1],
                        1,
                        &Tolerance::with_rel(1e-12),
                    )?
                    .value;
                }
                Ok(total)
            }
        }
    }

    /// Spot-checks the non-decreasing flag on a grid over `[0, horizon]`.
    pub fn verify_monotone(&self, horizon: f64, points: usize) -> bool {
        if !self.nondecreasing {
            return true;
        }
        let n = points.max(2);
        let mut prev = self.evaluate(0.0);
        (1..n).all(|k| {
            let v = self.evaluate(horizon * k as f64 / (n - 1) as f64);
            let ok = v >= prev;
            prev = v;
            ok
        })
    }
}

fn tabulated(points: &[(f64, f64)], rule: Interpolation, t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= t);
    let (t0, v0) = points[i - 1];
    let (t1, v1) = points[i];
    let u = (t - t0) / (t1 - t0);
    match rule {
        Interpolation::Linear => v0 + u * (v1 - v0),
        Interpolation::LogLinear => (v0.ln() + u * (v1.ln() - v0.ln())).exp(),
    }
}
