//! Ancestral lineages of the particle system and the path functionals built
//! on them: the occupation time `Y_t(f) = ∫_0^t X_s(f) ds`, the inhabitation
//! time `Z_t(f)` (time spent by the ancestors of the living particles) and the
//! martingale corrector `M_t = Z_t - Y_t`.

mod arena;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moran::{ParticleState, Trace};
use crate::test_function::{Shape, TestFunction};

pub use arena::{AncestralPath, GenealogyArena, NodeId};
pub(crate) use arena::trapezoid;

/// Ordered `(time, value)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Misaligned(format!(
                "{} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "times not increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at a time of the series.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.times.iter().position(|&s| s == t).map(|k| self.values[k])
    }
}

/// `M_t = Z_t - Y_t` on a common time grid.
pub fn martingale_corrector(z: &TimeSeries, y: &TimeSeries) -> Result<TimeSeries> {
    if z.times != y.times {
        return Err(Error::Misaligned(format!(
            "inhabitation series has {} times, occupation series {}, or their times differ",
            z.len(),
            y.len()
        )));
    }
    let values = z.values.iter().zip(&y.values).map(|(a, b)| a - b).collect();
    Ok(TimeSeries {
        times: z.times.clone(),
        values,
    })
}

fn constant_value(f: &TestFunction) -> Option<f64> {
    match f.shape() {
        Shape::Constant { value } => Some(*value),
        _ => None,
    }
}

/// `Y_t(f) = ∫_0^t X_s(f) ds` from the running sums recorded in a trace.
///
/// At trace times this is the simulation's own trapezoid sum over every
/// particle's motion steps; between them the running sum is interpolated
/// linearly. Constant functions are integrated exactly.
pub fn occupation_time(trace: &Trace, f: &TestFunction, t: f64) -> Result<f64> {
    let horizon = trace.times().last().copied().unwrap_or(0.0);
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("{t} must be non-negative")));
    }
    if t > horizon {
        return Err(Error::BeyondHorizon { time: t, horizon });
    }
    if let Some(c) = constant_value(f) {
        return Ok(c * t);
    }
    let channel = trace.channel(&f.name()).ok_or_else(|| {
        Error::Unsupported(format!("{} was not tracked during the run", f.name()))
    })?;
    let times = trace.times();
    let k = times.partition_point(|&s| s < t);
    if times[k] == t {
        return Ok(channel.y[k]);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let u = (t - t0) / (t1 - t0);
    Ok(channel.y[k - 1] + u * (channel.y[k] - channel.y[k - 1]))
}

/// `Z_t(f) = (1/N) Σ_i ∫_0^t f(ξ^i(s)) ds` over the ancestral paths of the
/// living particles, with the trapezoid rule used for the occupation time.
pub fn inhabitation_time(
    state: &ParticleState,
    arena: &GenealogyArena,
    f: &TestFunction,
    t: f64,
) -> Result<f64> {
    if state.time() != t {
        return Err(Error::param(
            "t",
            format!("state is at time {}, not {t}", state.time()),
        ));
    }
    if let Some(c) = constant_value(f) {
        return Ok(c * t);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let eval = |x: &[f64]| f.evaluate(x);
    let sums = arena.path_integrals(state.lineage_ids(), &eval, t)?;
    Ok(sums.iter().sum::<f64>() * (1.0 / state.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrector_requires_aligned_grids() {
        let z = TimeSeries::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        let y = TimeSeries::new(vec![0.0, 1.0], vec![0.0, 1.5]).unwrap();
        let m = martingale_corrector(&z, &y).unwrap();
        assert_eq!(m.values(), &[0.0, 0.5]);
        let y2 = TimeSeries::new(vec![0.0, 2.0], vec![0.0, 1.5]).unwrap();
        assert!(matches!(martingale_corrector(&z, &y2), Err(Error::Misaligned(_))));
        assert!(TimeSeries::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }
}
