//! The event-driven simulation loop.
//!
//! Motion is exact and lazy: a particle is moved only when it takes part in
//! an event or when the whole system is brought to a grid time (a multiple of
//! the motion step, a snapshot time or the horizon). Path samples, the
//! occupation and inhabitation running sums and the quadratic-variation
//! compensator all live on those per-particle update times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genealogy::{trapezoid, GenealogyArena, NodeId};
use crate::rng::RngStream;
use crate::stable_motion::{increment_unchecked, StableParams};
use crate::test_function::{Shape, TestFunction};

use super::{
    choose_pair, next_resampling_time, EventLog, EventRecord, InitialDistribution,
    ParticleState, SamplingSchedule,
};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: StableParams,
    pub schedule: SamplingSchedule,
    pub particles: usize,
    pub eta: f64,
    pub initial: InitialDistribution,
    /// Motion step `Δ`: the resolution of stored paths and of the time
    /// quadrature, not of the dynamics.
    pub step: f64,
    pub horizon: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    /// Stream id; replicas of one experiment differ only here.
    pub stream: u64,
    /// Functions whose `X`, `Y`, `Z` and quadratic variation are tracked.
    pub tracked: Vec<TestFunction>,
    pub keep_events: bool,
    /// Store path samples at grid times. Without them the genealogy keeps
    /// only branch points, which is all the running sums need.
    pub record_paths: bool,
    /// Prune the genealogy at every snapshot.
    pub prune: bool,
}

impl RunConfig {
    pub fn new(
        params: StableParams,
        schedule: SamplingSchedule,
        particles: usize,
        step: f64,
        horizon: f64,
        seed: u64,
    ) -> Self {
        Self {
            params,
            schedule,
            particles,
            eta: 1.0,
            initial: InitialDistribution::origin(params.dim()),
            step,
            horizon,
            snapshot_times: vec![horizon],
            seed,
            stream: 0,
            tracked: Vec::new(),
            keep_events: true,
            record_paths: true,
            prune: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::param(
                "particles",
                format!("{} particles, need at least 2", self.particles),
            ));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", format!("{} must be positive", self.eta)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param("step", format!("{} must be positive", self.step)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", format!("{} must be positive", self.horizon)));
        }
        if let Some(s) = self
            .snapshot_times
            .iter()
            .find(|&&s| !(s >= 0.0 && s <= self.horizon))
        {
            return Err(Error::param(
                "snapshot_times",
                format!("{s} lies outside [0, {}]", self.horizon),
            ));
        }
        self.initial.validate(self.params.dim())?;
        for f in &self.tracked {
            if f.dim() != self.params.dim() {
                return Err(Error::param(
                    "tracked",
                    format!("{} is defined on R^{}", f.name(), f.dim()),
                ));
            }
        }
        Ok(())
    }

    /// The times at which every particle is brought up to date, with a flag
    /// for snapshot times. Grid points within a relative `1e-9` step of a
    /// snapshot or of the horizon are merged into it.
    fn sync_grid(&self) -> Vec<(f64, bool)> {
        let mut marks: Vec<(f64, bool)> = self
            .snapshot_times
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| (s, true))
            .collect();
        marks.push((self.horizon, false));
        let k_max = (self.horizon / self.step).floor() as u64;
        for k in 1..=k_max {
            marks.push((k as f64 * self.step, false));
        }
        marks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tol = 1e-9 * self.step;
        let exact = |t: f64| t == self.horizon || self.snapshot_times.contains(&t);
        let mut out: Vec<(f64, bool)> = Vec::with_capacity(marks.len());
        for (t, snap) in marks {
            if t > self.horizon {
                continue;
            }
            match out.last_mut() {
                Some(last) if t - last.0 <= tol => {
                    if exact(t) {
                        last.0 = t;
                    }
                    last.1 |= snap;
                }
                _ => out.push((t, snap)),
            }
        }
        out
    }
}

/// Tracked values of one function at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackedValues {
    pub function: String,
    /// `X_t(f)`
    pub x: f64,
    /// Occupation time `Y_t(f)`.
    pub y: f64,
    /// Inhabitation time `Z_t(f)`.
    pub z: f64,
    /// `M_t = Z_t - Y_t`.
    pub m: f64,
    /// Sum of squared jumps of `X(f)` at resampling events.
    pub qv_jump: f64,
    /// `η ∫_0^t (X_s(f²) - X_s(f)²) / φ(s) ds`.
    pub qv_compensator: f64,
    /// Quadratic variation of the motion part of `X(f)` for Brownian motion,
    /// `(2/N) ∫_0^t X_s(|∇f|²) ds`; zero for `α < 2`.
    pub qv_motion: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub state: ParticleState,
    pub values: Vec<TrackedValues>,
}

impl Snapshot {
    pub fn time(&self) -> f64 {
        self.state.time()
    }

    pub fn value(&self, function: &str) -> Option<&TrackedValues> {
        self.values.iter().find(|v| v.function == function)
    }
}

/// Running sums of one tracked function at every grid time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceChannel {
    pub function: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub qv_jump: Vec<f64>,
    pub qv_compensator: Vec<f64>,
    pub qv_motion: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    times: Vec<f64>,
    channels: Vec<TraceChannel>,
}

impl Trace {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn channels(&self) -> &[TraceChannel] {
        &self.channels
    }

    pub fn channel(&self, function: &str) -> Option<&TraceChannel> {
        self.channels.iter().find(|c| c.function == function)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub events: EventLog,
    pub event_count: usize,
    pub arena: GenealogyArena,
    pub trace: Trace,
    pub final_state: ParticleState,
}

impl RunOutput {
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.time() == t)
    }
}

struct Engine<'a> {
    cfg: &'a RunConfig,
    n: usize,
    d: usize,
    nf: usize,
    clock: Vec<f64>,
    pos: Vec<f64>,
    node: Vec<NodeId>,
    /// `f_k(x_i)` at each particle's clock, `nf` per particle.
    fval: Vec<f64>,
    /// Inhabitation running sums along each particle's lineage.
    zacc: Vec<f64>,
    /// Occupation running sums over all particle histories.
    ysum: Vec<f64>,
    qv_jump: Vec<f64>,
    qv_comp: Vec<f64>,
    qv_motion: Vec<f64>,
    /// `(η V/φ, motion rate)` per function at the previous grid time.
    last_rates: Vec<(f64, f64)>,
    last_grid: f64,
    arena: GenealogyArena,
    step: Vec<f64>,
    motion_rng: RngStream,
}

impl<'a> Engine<'a> {
    fn advance(&mut self, i: usize, to: f64, record: bool) {
        let dt = to - self.clock[i];
        if dt <= 0.0 {
            return;
        }
        let d = self.d;
        increment_unchecked(&self.cfg.params, dt, &mut self.motion_rng, &mut self.step);
        let x = &mut self.pos[i * d..(i + 1) * d];
        for (xi, s) in x.iter_mut().zip(&self.step) {
            *xi += s;
        }
        let t0 = self.clock[i];
        for (k, f) in self.cfg.tracked.iter().enumerate() {
            let v = f.evaluate(x);
            let slot = i * self.nf + k;
            let term = trapezoid(t0, self.fval[slot], to, v);
            self.ysum[k] += term;
            self.zacc[slot] += term;
            self.fval[slot] = v;
        }
        self.clock[i] = to;
        if record {
            self.arena.push_unchecked(self.node[i], to, x);
        }
    }

    fn event(&mut self, time: f64, target: usize, source: usize) {
        self.advance(source, time, false);
        self.advance(target, time, false);
        let (d, nf) = (self.d, self.nf);
        let inv_n = 1.0 / self.n as f64;
        for k in 0..nf {
            let jump = (self.fval[source * nf + k] - self.fval[target * nf + k]) * inv_n;
            self.qv_jump[k] += jump * jump;
        }
        self.pos.copy_within(source * d..(source + 1) * d, target * d);
        self.fval.copy_within(source * nf..(source + 1) * nf, target * nf);
        self.zacc.copy_within(source * nf..(source + 1) * nf, target * nf);
        let parent = self.node[source];
        let x = &self.pos[source * d..(source + 1) * d];
        self.node[source] = self.arena.fork_unchecked(parent, time, x);
        self.node[target] = self.arena.fork_unchecked(parent, time, x);
    }

    /// `(η V_t(f)/φ(t), (2/N) X_t(|∇f|²))` with every particle at time `t`.
    fn rates(&self, t: f64) -> Vec<(f64, f64)> {
        let inv_phi = (-self.cfg.schedule.ln_evaluate(t)).exp();
        let inv_n = 1.0 / self.n as f64;
        let gaussian = self.cfg.params.is_gaussian();
        let mut xbuf = vec![0.0; self.d];
        (0..self.nf)
            .map(|k| {
                let f = &self.cfg.tracked[k];
                let (mut s1, mut s2, mut g2) = (0.0, 0.0, 0.0);
                for i in 0..self.n {
                    let v = self.fval[i * self.nf + k];
                    s1 += v;
                    s2 += v * v;
                    if gaussian {
                        xbuf.copy_from_slice(&self.pos[i * self.d..(i + 1) * self.d]);
                        g2 += gradient_norm2(f, &mut xbuf);
                    }
                }
                let (m1, m2) = (s1 * inv_n, s2 * inv_n);
                let v = (m2 - m1 * m1) * self.cfg.eta * inv_phi;
                (v, 2.0 * g2 * inv_n * inv_n)
            })
            .collect()
    }

    fn sync(&mut self, t: f64) {
        let record = self.cfg.record_paths;
        for i in 0..self.n {
            self.advance(i, t, record);
        }
        let rates = self.rates(t);
        let dt = t - self.last_grid;
        for k in 0..self.nf {
            self.qv_comp[k] += trapezoid(0.0, self.last_rates[k].0, dt, rates[k].0);
            self.qv_motion[k] += trapezoid(0.0, self.last_rates[k].1, dt, rates[k].1);
        }
        self.last_rates = rates;
        self.last_grid = t;
    }

    fn values(&self, t: f64) -> Vec<TrackedValues> {
        let inv_n = 1.0 / self.n as f64;
        self.cfg
            .tracked
            .iter()
            .enumerate()
            .map(|(k, f)| {
                if let Shape::Constant { value } = f.shape() {
                    return TrackedValues {
                        function: f.name(),
                        x: *value,
                        y: value * t,
                        z: value * t,
                        m: 0.0,
                        qv_jump: 0.0,
                        qv_compensator: 0.0,
                        qv_motion: 0.0,
                    };
                }
                let x: f64 = (0..self.n).map(|i| self.fval[i * self.nf + k]).sum::<f64>() * inv_n;
                let z: f64 = (0..self.n).map(|i| self.zacc[i * self.nf + k]).sum::<f64>() * inv_n;
                let y = self.ysum[k] * inv_n;
                TrackedValues {
                    function: f.name(),
                    x,
                    y,
                    z,
                    m: z - y,
                    qv_jump: self.qv_jump[k],
                    qv_compensator: self.qv_comp[k],
                    qv_motion: self.qv_motion[k],
                }
            })
            .collect()
    }

    fn state(&self, t: f64) -> ParticleState {
        ParticleState {
            time: t,
            dim: self.d,
            eta: self.cfg.eta,
            positions: self.pos.clone(),
            lineage: self.node.clone(),
        }
    }
}

/// `|∇f(x)|²` by central differences; `x` is restored on return.
fn gradient_norm2(f: &TestFunction, x: &mut [f64]) -> f64 {
    let h = 1e-5 * f.effective_radius().unwrap_or(1.0).max(1e-3);
    let mut g2 = 0.0;
    for c in 0..x.len() {
        let x0 = x[c];
        x[c] = x0 + h;
        let up = f.evaluate(x);
        x[c] = x0 - h;
        let down = f.evaluate(x);
        x[c] = x0;
        let g = (up - down) / (2.0 * h);
        g2 += g * g;
    }
    g2
}

/// Runs the particle system from time 0 to the horizon.
///
/// Event times and pair choices, motion increments and initial positions use
/// three separate sub-streams of the configured `(seed, stream)`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let root = RngStream::new(cfg.seed, cfg.stream);
    let mut event_rng = root.substream(0);
    let motion_rng = root.substream(1);
    let mut init_rng = root.substream(2);

    let (n, d, nf) = (cfg.particles, cfg.params.dim(), cfg.tracked.len());
    let mut arena = GenealogyArena::new(d);
    let initial = ParticleState::initial(&cfg.initial, n, cfg.eta, &mut init_rng, &mut arena)?;
    let mut fval = vec![0.0; n * nf];
    for i in 0..n {
        for (k, f) in cfg.tracked.iter().enumerate() {
            fval[i * nf + k] = f.evaluate(initial.position(i));
        }
    }
    let mut eng = Engine {
        cfg,
        n,
        d,
        nf,
        clock: vec![0.0; n],
        pos: initial.positions.clone(),
        node: initial.lineage.clone(),
        fval,
        zacc: vec![0.0; n * nf],
        ysum: vec![0.0; nf],
        qv_jump: vec![0.0; nf],
        qv_comp: vec![0.0; nf],
        qv_motion: vec![0.0; nf],
        last_rates: Vec::new(),
        last_grid: 0.0,
        arena,
        step: vec![0.0; d],
        motion_rng,
    };
    eng.last_rates = eng.rates(0.0);

    let mut trace = Trace {
        times: Vec::new(),
        channels: cfg
            .tracked
            .iter()
            .map(|f| TraceChannel {
                function: f.name(),
                ..Default::default()
            })
            .collect(),
    };
    let record_trace = |trace: &mut Trace, t: f64, values: &[TrackedValues]| {
        trace.times.push(t);
        for (c, v) in trace.channels.iter_mut().zip(values) {
            c.x.push(v.x);
            c.y.push(v.y);
            c.z.push(v.z);
            c.qv_jump.push(v.qv_jump);
            c.qv_compensator.push(v.qv_compensator);
            c.qv_motion.push(v.qv_motion);
        }
    };

    let mut snapshots = Vec::new();
    let v0 = eng.values(0.0);
    record_trace(&mut trace, 0.0, &v0);
    if cfg.snapshot_times.contains(&0.0) {
        snapshots.push(Snapshot {
            state: initial.clone(),
            values: v0,
        });
    }

    let mut events = EventLog::new();
    let mut event_count = 0usize;
    let mut now = 0.0;
    for (g, snap) in cfg.sync_grid() {
        while let Some(tau) =
            next_resampling_time(&cfg.schedule, n, cfg.eta, now, g, g - now, &mut event_rng)?
        {
            let (target, source) = choose_pair(n, &mut event_rng);
            eng.event(tau, target, source);
            event_count += 1;
            if cfg.keep_events {
                events.push(EventRecord {
                    time: tau,
                    source,
                    target,
                })?;
            }
            now = tau;
        }
        eng.sync(g);
        now = g;
        let values = eng.values(g);
        record_trace(&mut trace, g, &values);
        if snap {
            if cfg.prune {
                eng.arena.prune(&mut eng.node)?;
            }
            snapshots.push(Snapshot {
                state: eng.state(g),
                values,
            });
        }
    }
    let final_state = eng.state(cfg.horizon);
    Ok(RunOutput {
        snapshots,
        events,
        event_count,
        arena: eng.arena,
        trace,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genealogy::inhabitation_time;
    use crate::moran::empirical_integral;

    fn config() -> RunConfig {
        let p = StableParams::new(2.0, 1).unwrap();
        let mut c = RunConfig::new(p, SamplingSchedule::constant(1.0).unwrap(), 20, 0.05, 1.0, 5);
        c.snapshot_times = vec![0.0, 0.5, 1.0];
        c.tracked = vec![
            TestFunction::gaussian_bump(1, 1.0).unwrap(),
            TestFunction::constant(1, 1.0).unwrap(),
        ];
        c
    }

    #[test]
    fn grid_merges_snapshot_times() {
        let mut c = config();
        c.step = 0.1;
        c.snapshot_times = vec![0.3, 0.7];
        let g = c.sync_grid();
        assert_eq!(g.len(), 10);
        assert!(g.iter().any(|&(t, s)| t == 0.3 && s));
        assert_eq!(g.last().unwrap().0, 1.0);
    }

    #[test]
    fn inhabitation_from_the_arena_matches_the_running_sums() {
        let out = run(&config()).unwrap();
        let f = &config().tracked[0];
        let last = out.snapshots.last().unwrap();
        let z = inhabitation_time(&out.final_state, &out.arena, f, 1.0).unwrap();
        assert_eq!(z, last.values[0].z);
        assert_eq!(last.values[1].y, 1.0);
        assert_eq!(last.values[1].z, 1.0);
        assert_eq!(empirical_integral(&last.state, f), last.values[0].x);
        out.arena.check_integrity(out.final_state.lineage_ids()).unwrap();
        for (i, &l) in out.final_state.lineage_ids().iter().enumerate() {
            let p = out.arena.ancestral_path(l, 1.0).unwrap();
            assert_eq!(p.at(1.0), out.final_state.position(i));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run(&config()).unwrap();
        let b = run(&config()).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.final_state, b.final_state);
        let mut c = config();
        c.stream = 1;
        assert_ne!(run(&c).unwrap().final_state, a.final_state);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = config();
        c.particles = 1;
        assert!(run(&c).is_err());
        let mut c = config();
        c.snapshot_times = vec![2.0];
        assert!(run(&c).is_err());
        let mut c = config();
        c.step = 0.0;
        assert!(run(&c).is_err());
    }
}
