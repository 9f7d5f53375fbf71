//! The Moran particle system: `N` particles follow independent stable
//! motions, and at rate `η/(2φ(t))` per ordered pair `(i, j)` particle `i`
//! jumps onto particle `j` and adopts its ancestry.
//!
//! With this rate a jump of `X^N(f)` has size `(f(x_j) - f(x_i))/N` and the
//! jump intensity summed over ordered pairs is
//! `η/(2φ) · N^{-2} Σ_{i≠j} (f(x_j) - f(x_i))² = η (X(f²) - X(f)²)/φ`,
//! the quadratic variation of the Fleming-Viot martingale, with no finite-`N`
//! correction.

mod engine;
mod initial;
mod schedule;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genealogy::{GenealogyArena, NodeId};
use crate::rng::RngStream;
use crate::stable_motion::{increment_unchecked, StableParams};
use crate::test_function::TestFunction;

pub use engine::{run, RunConfig, RunOutput, Snapshot, Trace, TraceChannel, TrackedValues};
pub use initial::InitialDistribution;
pub use schedule::{Interpolation, SamplingSchedule, ScheduleKind};

/// Positions and lineages of the `N` particles at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    time: f64,
    dim: usize,
    eta: f64,
    positions: Vec<f64>,
    lineage: Vec<NodeId>,
}

impl ParticleState {
    pub fn new(
        time: f64,
        dim: usize,
        eta: f64,
        positions: Vec<f64>,
        lineage: Vec<NodeId>,
    ) -> Result<Self> {
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::param("time", format!("{time} must be non-negative")));
        }
        if dim == 0 || positions.len() % dim != 0 {
            return Err(Error::param("positions", "length is not a multiple of the dimension"));
        }
        let n = positions.len() / dim;
        if n < 2 {
            return Err(Error::param("particles", format!("{n} particles, need at least 2")));
        }
        if lineage.len() != n {
            return Err(Error::param(
                "lineage",
                format!("{} lineage ids for {n} particles", lineage.len()),
            ));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("{eta} must be positive")));
        }
        Ok(Self {
            time,
            dim,
            eta,
            positions,
            lineage,
        })
    }

    /// `n` particles drawn from `μ` at time 0, each the root of its own
    /// lineage in `arena`.
    pub fn initial(
        initial: &InitialDistribution,
        n: usize,
        eta: f64,
        rng: &mut RngStream,
        arena: &mut GenealogyArena,
    ) -> Result<Self> {
        let dim = arena.dim();
        initial.validate(dim)?;
        let mut positions = vec![0.0; n * dim];
        let mut lineage = Vec::with_capacity(n);
        for x in positions.chunks_exact_mut(dim) {
            initial.sample_into(rng, x);
            lineage.push(arena.add_root(x));
        }
        Self::new(0.0, dim, eta, positions, lineage)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Number of particles.
    pub fn len(&self) -> usize {
        self.lineage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lineage.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn lineage_ids(&self) -> &[NodeId] {
        &self.lineage
    }

    /// `time, particle, x_1..x_d, lineage` rows.
    pub fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for i in 0..self.len() {
            let mut row = vec![self.time.to_string(), i.to_string()];
            row.extend(self.position(i).iter().map(|v| v.to_string()));
            row.push(self.lineage[i].to_string());
            w.write_record(&row)?;
        }
        Ok(())
    }

    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut h = vec!["time".to_string(), "particle".to_string()];
        h.extend((1..=dim).map(|i| format!("x{i}")));
        h.push("lineage".to_string());
        h
    }
}

/// One resampling event: particle `target` jumped onto particle `source`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub source: usize,
    pub target: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    records: Vec<EventRecord>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: EventRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(r.time > last.time) {
                return Err(Error::param(
                    "time",
                    format!("event at {} does not follow {}", r.time, last.time),
                ));
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    /// Number of events in `[0, t]`.
    pub fn count_until(&self, t: f64) -> usize {
        self.records.partition_point(|r| r.time <= t)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "source", "target"])?;
        for r in &self.records {
            w.write_record([r.time.to_string(), r.source.to_string(), r.target.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Total resampling intensity `η N(N-1) / 2` before division by `φ`.
fn pair_rate(n: usize, eta: f64) -> f64 {
    eta * (n as f64) * (n as f64 - 1.0) / 2.0
}

/// First event after `t` of the Poisson process with intensity
/// `λ(s) = η N(N-1)/(2φ(s))`, or `None` if there is none before `horizon`.
///
/// Thinning runs over consecutive windows of length `window`, each against
/// the envelope `η N(N-1)/(2 min φ)` on that window.
pub fn next_resampling_time(
    schedule: &SamplingSchedule,
    n: usize,
    eta: f64,
    t: f64,
    horizon: f64,
    window: f64,
    rng: &mut RngStream,
) -> Result<Option<f64>> {
    if n < 2 {
        return Err(Error::param("particles", format!("{n} particles, need at least 2")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", format!("{eta} must be positive")));
    }
    if !(window > 0.0) {
        return Err(Error::param("window", format!("{window} must be positive")));
    }
    let total = pair_rate(n, eta);
    let mut now = t;
    while now < horizon {
        let end = (now + window).min(horizon);
        let floor = schedule.min_on(now, end)?;
        let bound = total / floor;
        if bound > 0.0 {
            let mut s = now;
            loop {
                s += rng.exp1() / bound;
                if s > end {
                    break;
                }
                if s > t && rng.uniform() * schedule.evaluate(s) < floor {
                    return Ok(Some(s));
                }
            }
        }
        now = end;
    }
    Ok(None)
}

#[inline]
fn choose_pair(n: usize, rng: &mut RngStream) -> (usize, usize) {
    let target = rng.index(n);
    let mut source = rng.index(n - 1);
    if source >= target {
        source += 1;
    }
    (target, source)
}

/// A resampling event at the state's time: a uniformly chosen ordered pair
/// `i ≠ j`; particle `i` moves to particle `j` and both continue on new
/// lineage nodes whose parent is `j`'s node.
pub fn resample(
    state: &mut ParticleState,
    arena: &mut GenealogyArena,
    rng: &mut RngStream,
) -> Result<EventRecord> {
    let n = state.len();
    let (i, j) = choose_pair(n, rng);
    let d = state.dim;
    let xj: Vec<f64> = state.position(j).to_vec();
    let parent = state.lineage[j];
    let a = arena.fork(parent, state.time, &xj)?;
    let b = arena.fork_unchecked(parent, state.time, &xj);
    state.lineage[j] = a;
    state.lineage[i] = b;
    state.positions[i * d..(i + 1) * d].copy_from_slice(&xj);
    Ok(EventRecord {
        time: state.time,
        source: j,
        target: i,
    })
}

/// Moves every particle by an independent stable increment over `dt` and
/// records the new positions on their lineages.
pub fn advance_motion(
    state: &mut ParticleState,
    dt: f64,
    params: &StableParams,
    rng: &mut RngStream,
    arena: &mut GenealogyArena,
) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("{dt} must be positive")));
    }
    if params.dim() != state.dim {
        return Err(Error::param("params", "dimension differs from the state"));
    }
    let d = state.dim;
    let t = state.time + dt;
    let mut step = vec![0.0; d];
    for i in 0..state.len() {
        increment_unchecked(params, dt, rng, &mut step);
        let x = &mut state.positions[i * d..(i + 1) * d];
        for (xi, s) in x.iter_mut().zip(&step) {
            *xi += s;
        }
        arena.push_sample(state.lineage[i], t, x)?;
    }
    state.time = t;
    Ok(())
}

/// `X^N(f) = (1/N) Σ_i f(x_i)`.
pub fn empirical_integral(state: &ParticleState, f: &TestFunction) -> f64 {
    let s: f64 = state
        .positions
        .chunks_exact(state.dim)
        .map(|x| f.evaluate(x))
        .sum();
    s / state.len() as f64
}
