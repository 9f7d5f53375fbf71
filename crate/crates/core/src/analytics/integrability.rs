//! Convergence checks for `∫ s^{p+1+ε} / φ(s) ds` at infinity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moran::{SamplingSchedule, ScheduleKind};
use crate::quadrature::GaussRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Pass => "pass",
            VerdictKind::Fail => "fail",
            VerdictKind::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub exponent: f64,
    pub reason: String,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.kind == VerdictKind::Pass
    }

    fn new(kind: VerdictKind, exponent: f64, reason: impl Into<String>) -> Self {
        Self {
            kind,
            exponent,
            reason: reason.into(),
        }
    }
}

const DEFAULT_HORIZON: f64 = 1e6;
const TAIL_BLOCKS: usize = 8;

/// Whether `∫^∞ s^{p+1+ε}/φ(s) ds < ∞`. With `p = -1, ε = 0` this is the
/// condition `∫_1^∞ ds/φ(s) < ∞`.
pub fn check_phi_integrability(schedule: &SamplingSchedule, p: f64, eps: f64) -> Result<Verdict> {
    check_phi_integrability_to(schedule, p, eps, DEFAULT_HORIZON)
}

/// As [`check_phi_integrability`], with the horizon used by the numerical
/// tail analysis of tabulated schedules.
pub fn check_phi_integrability_to(
    schedule: &SamplingSchedule,
    p: f64,
    eps: f64,
    horizon: f64,
) -> Result<Verdict> {
    if !(p >= -1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("{p} must be at least -1")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", format!("{eps} must be non-negative")));
    }
    let e = p + 1.0 + eps;
    Ok(match schedule.kind() {
        ScheduleKind::Constant { .. } => Verdict::new(
            VerdictKind::Fail,
            e,
            format!("s^{e}/c does not decay, the integral diverges"),
        ),
        ScheduleKind::Exponential { beta } => Verdict::new(
            VerdictKind::Pass,
            e,
            format!("s^{e} e^(-{beta} s) is integrable for every power"),
        ),
        ScheduleKind::Polynomial { n } => {
            let tail = e - n;
            if tail < -1.0 {
                Verdict::new(
                    VerdictKind::Pass,
                    e,
                    format!("integrand decays like s^{tail} with {tail} < -1"),
                )
            } else {
                Verdict::new(
                    VerdictKind::Fail,
                    e,
                    format!("integrand decays like s^{tail} with {tail} >= -1"),
                )
            }
        }
        ScheduleKind::Tabulated { .. } => numeric_tail(schedule, e, horizon)?,
    })
}

/// Dyadic block analysis: `I_k = ∫_{2^k}^{2^{k+1}} s^e/φ(s) ds`. Ratios
/// `I_{k+1}/I_k` bounded below one over the last blocks certify a geometric
/// tail; ratios at or above one mean the tail does not decay.
fn numeric_tail(schedule: &SamplingSchedule, e: f64, horizon: f64) -> Result<Verdict> {
    let rule = GaussRule::legendre(32);
    let top = horizon.max(2.0).log2().floor() as i32;
    let mut ln_blocks = Vec::new();
    for k in 0..top {
        let a = 2f64.powi(k);
        let b = 2.0 * a;
        let mut terms = Vec::with_capacity(rule.len());
        for (s, w) in rule.mapped(a, b) {
            let phi = schedule.evaluate(s);
            if !(phi > 0.0) {
                return Err(Error::param("phi", format!("phi({s}) = {phi} is not positive")));
            }
            terms.push(w.ln() + e * s.ln() - schedule.ln_evaluate(s));
        }
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
        ln_blocks.push(m + sum.ln());
    }
    if ln_blocks.len() < TAIL_BLOCKS + 1 {
        return Ok(Verdict::new(
            VerdictKind::Inconclusive,
            e,
            "horizon too short for a tail analysis",
        ));
    }
    let ratios: Vec<f64> = ln_blocks.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &ratios[ratios.len() - TAIL_BLOCKS..];
    let worst = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = (1.0 - 1e-3f64).ln();
    Ok(if worst <= bound {
        let r = worst.exp();
        Verdict::new(
            VerdictKind::Pass,
            e,
            format!("dyadic block ratios at most {r:.4} over the last {TAIL_BLOCKS} blocks"),
        )
    } else if best >= 0.0 {
        Verdict::new(
            VerdictKind::Fail,
            e,
            format!(
                "dyadic block integrals non-decreasing over the last {TAIL_BLOCKS} blocks"
            ),
        )
    } else {
        Verdict::new(
            VerdictKind::Inconclusive,
            e,
            "tail ratios neither certify decay nor growth",
        )
    })
}
