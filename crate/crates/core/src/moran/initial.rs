use serde::{Deserialize, Serialize};

use crate::analytics::{semigroup_apply, semigroup_apply_damped};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stable_motion::StableParams;
use crate::test_function::TestFunction;

/// Law `μ` of the initial particle positions (drawn independently).
///
/// Every supported law has finite moments of all orders, so the moment
/// condition `∫|x|^a μ(dx) < ∞` holds for every `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialDistribution {
    Point { at: Vec<f64> },
    UniformBall { center: Vec<f64>, radius: f64 },
    /// Independent coordinates with standard deviation `std`.
    Gaussian { center: Vec<f64>, std: f64 },
    /// Uniform over a finite list of atoms.
    Empirical { atoms: Vec<Vec<f64>> },
}

impl InitialDistribution {
    pub fn origin(dim: usize) -> Self {
        InitialDistribution::Point { at: vec![0.0; dim] }
    }

    /// Atoms read from a headerless CSV file with one point per line.
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut atoms = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let p = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Config(format!("{}: `{s}`: {e}", path.display())))
                })
                .collect::<Result<Vec<f64>>>()?;
            atoms.push(p);
        }
        Ok(InitialDistribution::Empirical { atoms })
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let check = |x: &[f64], what: &'static str| -> Result<()> {
            if x.len() != dim {
                return Err(Error::param(what, format!("expected {dim} coordinates, got {}", x.len())));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::param(what, "coordinates must be finite"));
            }
            Ok(())
        };
        match self {
            InitialDistribution::Point { at } => check(at, "at"),
            InitialDistribution::UniformBall { center, radius } => {
                check(center, "center")?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::param("radius", format!("{radius} must be positive")));
                }
                Ok(())
            }
            InitialDistribution::Gaussian { center, std } => {
                check(center, "center")?;
                if !(*std > 0.0 && std.is_finite()) {
                    return Err(Error::param("std", format!("{std} must be positive")));
                }
                Ok(())
            }
            InitialDistribution::Empirical { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::param("atoms", "no atoms"));
                }
                atoms.iter().try_for_each(|a| check(a, "atoms"))
            }
        }
    }

    /// The largest `a` with `∫|x|^a μ(dx) < ∞`.
    pub fn moment_order(&self) -> f64 {
        f64::INFINITY
    }

    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        match self {
            InitialDistribution::Point { at } => out.copy_from_slice(at),
            InitialDistribution::UniformBall { center, radius } => {
                let d = out.len();
                let mut n2 = 0.0;
                while n2 == 0.0 {
                    for v in out.iter_mut() {
                        *v = rng.normal();
                    }
                    n2 = out.iter().map(|v| v * v).sum::<f64>();
                }
                let r = radius * rng.uniform().powf(1.0 / d as f64) / n2.sqrt();
                for (v, c) in out.iter_mut().zip(center) {
                    *v = c + r * *v;
                }
            }
            InitialDistribution::Gaussian { center, std } => {
                for (v, c) in out.iter_mut().zip(center) {
                    *v = c + std * rng.normal();
                }
            }
            InitialDistribution::Empirical { atoms } => {
                out.copy_from_slice(&atoms[rng.index(atoms.len())]);
            }
        }
    }

    /// `μ(T_t f) = ∫ T_t f dμ`, the mean of `X_t(f)` started from `μ`.
    pub fn integrate_semigroup(&self, params: &StableParams, t: f64, f: &TestFunction) -> Result<f64> {
        self.validate(params.dim())?;
        let point = |x: &[f64]| -> Result<f64> {
            if t == 0.0 {
                Ok(f.evaluate(x))
            } else {
                semigroup_apply(params, t, f, x)
            }
        };
        match self {
            InitialDistribution::Point { at } => point(at),
            InitialDistribution::Empirical { atoms } => {
                let mut s = 0.0;
                for a in atoms {
                    s += point(a)?;
                }
                Ok(s / atoms.len() as f64)
            }
            InitialDistribution::Gaussian { center, std } => {
                let s2 = std * std;
                let m = move |rho: f64| (-0.5 * s2 * rho * rho).exp();
                semigroup_apply_damped(params, t, f, center, &m, 84f64.sqrt() / std)
            }
            InitialDistribution::UniformBall { center, radius } => {
                let ball = TestFunction::indicator_ball(params.dim(), *radius)?;
                let mass = ball.radial_fourier(0.0)?;
                let m = move |rho: f64| ball.radial_fourier(rho).unwrap_or(f64::NAN) / mass;
                semigroup_apply_damped(params, t, f, center, &m, 2000.0 / radius)
            }
        }
    }
}
