use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::Verdict;
use crate::error::{Error, Result};

/// Mean, sample standard deviation and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            n,
            mean,
            sd,
            se: sd / (n as f64).sqrt(),
        }
    }

    /// A deterministic value: no spread, zero standard error.
    pub fn exact(value: f64) -> Self {
        Self {
            n: 1,
            mean: value,
            sd: 0.0,
            se: 0.0,
        }
    }
}

/// One ensemble statistic at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub quantity: String,
    pub function: String,
    pub particles: usize,
    pub t: f64,
    /// Number of replicas; `0` for deterministic quantities.
    pub replicas: usize,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    /// `(mean - target) / stderr` when both exist.
    pub z: Option<f64>,
}

impl Estimate {
    pub fn new(
        quantity: &str,
        function: &str,
        particles: usize,
        t: f64,
        s: &Summary,
        target: Option<f64>,
    ) -> Self {
        let z = target.and_then(|g| (s.se > 0.0).then(|| (s.mean - g) / s.se));
        Self {
            quantity: quantity.into(),
            function: function.into(),
            particles,
            t,
            replicas: s.n,
            mean: s.mean,
            sd: s.sd,
            stderr: s.se,
            target,
            z,
        }
    }

    pub fn deterministic(quantity: &str, function: &str, t: f64, value: f64) -> Self {
        let mut e = Self::new(quantity, function, 0, t, &Summary::exact(value), None);
        e.replicas = 0;
        e
    }
}

/// A pass/fail decision with the numbers it was made from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub function: String,
    pub t: Option<f64>,
    pub replicas: usize,
    pub statistic: f64,
    pub stderr: f64,
    pub target: f64,
    pub z: Option<f64>,
    /// Allowed deviation in standard errors.
    pub threshold: f64,
    /// Allowed deviation relative to `|target|`.
    pub tolerance: f64,
    pub passed: bool,
    pub rule: String,
}

impl Check {
    fn base(name: &str, function: &str, t: Option<f64>, s: &Summary, target: f64) -> Self {
        Self {
            name: name.into(),
            function: function.into(),
            t,
            replicas: s.n,
            statistic: s.mean,
            stderr: s.se,
            target,
            z: (s.se > 0.0).then(|| (s.mean - target) / s.se),
            threshold: 0.0,
            tolerance: 0.0,
            passed: false,
            rule: String::new(),
        }
    }

    /// `|mean - target| <= z se + tol |target|`.
    pub fn two_sided(
        name: &str,
        function: &str,
        t: Option<f64>,
        s: &Summary,
        target: f64,
        z: f64,
        tol: f64,
    ) -> Self {
        let mut c = Self::base(name, function, t, s, target);
        c.threshold = z;
        c.tolerance = tol;
        c.passed = (s.mean - target).abs() <= z * s.se + tol * target.abs();
        c.rule = format!("|mean - target| <= {z} stderr + {tol} |target|");
        c
    }

    /// `mean <= bound + z se`.
    pub fn upper(name: &str, function: &str, t: Option<f64>, s: &Summary, bound: f64, z: f64) -> Self {
        let mut c = Self::base(name, function, t, s, bound);
        c.threshold = z;
        c.passed = s.mean <= bound + z * s.se;
        c.rule = format!("mean <= bound + {z} stderr");
        c
    }

    /// A statistic that must not exceed `bound`, with its own standard error
    /// (zero for exact identities) recorded for reference.
    pub fn at_most(
        name: &str,
        function: &str,
        t: Option<f64>,
        replicas: usize,
        statistic: f64,
        stderr: f64,
        bound: f64,
        rule: &str,
    ) -> Self {
        let s = Summary {
            n: replicas,
            mean: statistic,
            sd: stderr * (replicas as f64).sqrt(),
            se: stderr,
        };
        let mut c = Self::base(name, function, t, &s, bound);
        c.z = None;
        c.passed = statistic <= bound;
        c.rule = rule.into();
        c
    }
}

impl Check {
    /// A trend: `min_step` is the smallest improvement between consecutive
    /// points and must be positive.
    pub fn trend(name: &str, function: &str, replicas: usize, min_step: f64, rule: &str) -> Self {
        let mut c = Self::at_most(name, function, None, replicas, min_step, 0.0, 0.0, rule);
        c.passed = min_step > 0.0;
        c
    }
}

/// Verdict of an integrability condition on `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub description: String,
    pub exponent: f64,
    pub eps: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub id: String,
    pub experiment: String,
    pub label: Option<String>,
    /// Set when a hypothesis on `φ` fails; the numbers are still reported.
    pub exploratory: bool,
    pub notices: Vec<String>,
    pub conditions: Vec<Condition>,
    pub settings: serde_json::Value,
    pub estimates: Vec<Estimate>,
    pub checks: Vec<Check>,
}

impl ScalingReport {
    pub fn new(id: &str, experiment: &str, label: Option<String>, settings: serde_json::Value) -> Self {
        Self {
            id: id.into(),
            experiment: experiment.into(),
            label,
            exploratory: false,
            notices: Vec::new(),
            conditions: Vec::new(),
            settings,
            estimates: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn checks_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> {
        self.checks.iter().filter(move |c| c.name == name)
    }

    pub fn estimates_of<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a Estimate> {
        self.estimates.iter().filter(move |e| e.quantity == quantity)
    }
}

/// Several reports merged into one document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub reports: Vec<ScalingReport>,
}

impl ReportDocument {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(ScalingReport::passed)
    }

    /// Writes `report.json` and one `<id>/<quantity>.csv` per reported
    /// quantity into `dir`, returning the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&json, text)?;
        written.push(json);
        for r in &self.reports {
            let mut by_quantity: BTreeMap<&str, Vec<&Estimate>> = BTreeMap::new();
            for e in &r.estimates {
                by_quantity.entry(&e.quantity).or_default().push(e);
            }
            if by_quantity.is_empty() {
                continue;
            }
            let sub = dir.join(sanitize(&r.id));
            std::fs::create_dir_all(&sub)?;
            for (q, rows) in by_quantity {
                let path = sub.join(format!("{}.csv", sanitize(q)));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["t", "statistic", "stderr", "target", "function", "particles"])?;
                for e in rows {
                    w.write_record([
                        e.t.to_string(),
                        e.mean.to_string(),
                        e.stderr.to_string(),
                        e.target.map(|g| g.to_string()).unwrap_or_default(),
                        e.function.clone(),
                        e.particles.to_string(),
                    ])?;
                }
                w.flush()?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// File-name-safe form of an identifier.
pub fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    match s.as_str() {
        "" | "." | ".." => "_".into(),
        _ => s,
    }
}

/// Merges reports, rejecting repeated experiment ids.
pub fn summarize(reports: Vec<ScalingReport>) -> Result<ReportDocument> {
    let mut seen = std::collections::BTreeSet::new();
    for r in &reports {
        if !seen.insert(sanitize(&r.id)) {
            return Err(Error::DuplicateExperiment(r.id.clone()));
        }
    }
    Ok(ReportDocument { reports })
}
