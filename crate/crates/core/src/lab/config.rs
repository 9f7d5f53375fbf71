use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moran::{InitialDistribution, RunConfig, SamplingSchedule, ScheduleKind};
use crate::stable_motion::{Regime, StableParams};
use crate::test_function::TestFunction;

/// An experiment description, read from a sectioned TOML file.
///
/// ```toml
/// [motion]
/// alpha = 2.0
/// dim = 1
///
/// [schedule]
/// kind = "exponential"
/// beta = 1.0
///
/// [system]
/// particles = 2000
/// step = 0.01
///
/// [experiment]
/// replicas = 64
/// seed = 7
/// times = [2.0, 4.0, 8.0]
/// functions = ["gaussian-bump:width=2"]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub motion: MotionSection,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            motion: MotionSection::default(),
            schedule: default_schedule(),
            system: SystemSection::default(),
            experiment: ExperimentSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn default_schedule() -> ScheduleKind {
    ScheduleKind::Exponential { beta: 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSection {
    pub alpha: f64,
    pub dim: usize,
}

impl Default for MotionSection {
    fn default() -> Self {
        Self { alpha: 2.0, dim: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub particles: usize,
    pub eta: f64,
    pub step: f64,
    /// Defaults to the last evaluation time.
    pub horizon: Option<f64>,
    /// Defaults to a point mass at the origin.
    pub initial: Option<InitialDistribution>,
    /// Headerless CSV of atoms; overrides `initial`.
    pub initial_file: Option<PathBuf>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            particles: 2000,
            eta: 1.0,
            step: 0.01,
            horizon: None,
            initial: None,
            initial_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Report identifier; defaults to the experiment kind.
    pub id: Option<String>,
    pub replicas: usize,
    pub seed: u64,
    /// Explicit evaluation times. Ignored when `lattice_q` is set.
    pub times: Vec<f64>,
    /// Lattice `t_n` with `γ_d(t_n) = q^n`.
    pub lattice_q: Option<f64>,
    /// Inclusive range of lattice indices `n`.
    pub lattice_range: (i32, i32),
    /// Catalog entries such as `gaussian-bump:width=0.5`.
    pub functions: Vec<String>,
    /// Order of the mass-scaling target.
    pub order: u32,
    pub eps0: f64,
    /// z threshold of the mean tests.
    pub z_threshold: f64,
    /// z threshold of the quadratic-variation test.
    pub qv_threshold: f64,
    /// Y/Z agreement threshold, in joint standard errors.
    pub agreement_threshold: f64,
    /// Relative tolerance of the final scaled values.
    pub tolerance: f64,
    /// Repeat the ensemble with `2N` particles.
    pub n_doubling: bool,
    pub expansion_orders: Vec<u32>,
    pub expansion_times: Vec<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            id: None,
            replicas: 64,
            seed: 1,
            times: vec![2.0, 4.0, 8.0],
            lattice_q: None,
            lattice_range: (1, 3),
            functions: vec!["gaussian-bump".into()],
            order: 0,
            eps0: 0.01,
            z_threshold: 4.0,
            qv_threshold: 5.0,
            agreement_threshold: 2.0,
            tolerance: 0.15,
            n_doubling: false,
            expansion_orders: vec![0, 2],
            expansion_times: vec![4.0, 16.0, 64.0, 256.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub label: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `initial_file` is resolved against
    /// the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(f), Some(dir)) = (&cfg.system.initial_file, path.parent()) {
            if f.is_relative() {
                cfg.system.initial_file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<StableParams> {
        StableParams::new(self.motion.alpha, self.motion.dim)
    }

    pub fn sampling_schedule(&self) -> Result<SamplingSchedule> {
        SamplingSchedule::new(self.schedule.clone())
    }

    pub fn functions(&self) -> Result<Vec<TestFunction>> {
        if self.experiment.functions.is_empty() {
            return Err(Error::Config("no test functions given".into()));
        }
        let fs = self
            .experiment
            .functions
            .iter()
            .map(|s| TestFunction::parse(s, self.motion.dim))
            .collect::<Result<Vec<_>>>()?;
        for (i, f) in fs.iter().enumerate() {
            if fs[..i].iter().any(|g| g.name() == f.name()) {
                return Err(Error::Config(format!("{} is listed twice", f.name())));
            }
        }
        Ok(fs)
    }

    pub fn initial(&self) -> Result<InitialDistribution> {
        let mu = match (&self.system.initial_file, &self.system.initial) {
            (Some(path), _) => InitialDistribution::from_csv(path)?,
            (None, Some(mu)) => mu.clone(),
            (None, None) => InitialDistribution::origin(self.motion.dim),
        };
        mu.validate(self.motion.dim)?;
        Ok(mu)
    }

    /// The evaluation times: the lattice when `lattice_q` is set, else the
    /// explicit list.
    pub fn evaluation_times(&self) -> Result<Vec<f64>> {
        let times = match self.experiment.lattice_q {
            Some(q) => lattice_times(&self.params()?, q, self.experiment.lattice_range)?,
            None => self.experiment.times.clone(),
        };
        if times.is_empty() {
            return Err(Error::Config("no evaluation times".into()));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!(
                "evaluation times must increase: {} then {}",
                w[0], w[1]
            )));
        }
        if !(times[0] > 0.0) || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::Config("evaluation times must be positive and finite".into()));
        }
        Ok(times)
    }

    pub fn horizon(&self) -> Result<f64> {
        let times = self.evaluation_times()?;
        let last = *times.last().expect("non-empty");
        match self.system.horizon {
            None => Ok(last),
            Some(h) if h >= last => Ok(h),
            Some(h) => Err(Error::Config(format!(
                "evaluation time {last} lies beyond the horizon {h}"
            ))),
        }
    }

    pub fn label(&self) -> Option<String> {
        self.output.label.clone()
    }

    /// Checks everything a stochastic experiment needs.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.sampling_schedule()?;
        self.functions()?;
        self.initial()?;
        self.horizon()?;
        if self.experiment.replicas < 2 {
            return Err(Error::Config(format!(
                "{} replicas, need at least 2",
                self.experiment.replicas
            )));
        }
        let e = &self.experiment;
        for (name, v) in [
            ("z_threshold", e.z_threshold),
            ("qv_threshold", e.qv_threshold),
            ("agreement_threshold", e.agreement_threshold),
            ("tolerance", e.tolerance),
            ("eps0", e.eps0),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be non-negative")));
            }
        }
        self.run_config(self.system.particles, 0)?.validate()
    }

    /// The single-replica run configuration, tracking every listed function
    /// with snapshots at time 0 and at the evaluation times.
    pub fn run_config(&self, particles: usize, stream: u64) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(
            self.params()?,
            self.sampling_schedule()?,
            particles,
            self.system.step,
            self.horizon()?,
            self.experiment.seed,
        );
        cfg.eta = self.system.eta;
        cfg.initial = self.initial()?;
        cfg.stream = stream;
        cfg.tracked = self.functions()?;
        cfg.snapshot_times = std::iter::once(0.0)
            .chain(self.evaluation_times()?)
            .collect();
        Ok(cfg)
    }
}

/// Times `t_n`, `n` in the inclusive range, with `γ_d(t_n) = q^n`:
/// `q^{nα/(α-d)}` in low and `e^{q^n}` in critical dimension. In high
/// dimension `γ_d ≡ 1` and the geometric grid `q^n` is used instead.
pub fn lattice_times(params: &StableParams, q: f64, range: (i32, i32)) -> Result<Vec<f64>> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Config(format!("lattice_q = {q} must exceed 1")));
    }
    if range.0 > range.1 {
        return Err(Error::Config(format!("empty lattice range {range:?}")));
    }
    let a = params.alpha();
    let d = params.dim() as f64;
    let times: Vec<f64> = (range.0..=range.1)
        .map(|n| {
            let qn = q.powi(n);
            match params.regime() {
                Regime::Low => qn.powf(a / (a - d)),
                Regime::Critical => qn.exp(),
                Regime::High => qn,
            }
        })
        .collect();
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Config(format!(
            "lattice q = {q}, n in {range:?} leaves the representable range"
        )));
    }
    Ok(times)
}
