//! Test functions with Fourier transforms, moments and norms.
//!
//! The Fourier convention is `f̂(θ) = ∫ e^{-iθ·x} f(x) dx`. Functions from the
//! built-in catalog carry closed forms wherever one exists; the rest are
//! transformed numerically once and cached.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::quadrature::{integrate, GaussRule, Tolerance};
use crate::special::{ball_volume, bessel_j0, bessel_j1, gamma, sinc, sphere_area, sphere_monomial};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type FourierFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A user-supplied function. `radial` promises `f(x)` depends on `|x|` only,
/// in which case `eval` is only ever called on points `(r, 0, ..., 0)` by the
/// numerical transforms.
#[derive(Clone)]
pub struct CustomFunction {
    pub name: String,
    pub eval: EvalFn,
    pub fourier: Option<FourierFn>,
    pub support_radius: Option<f64>,
    pub radial: bool,
    pub parity: Parity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Asymptotic decay of `|f̂(θ)|` as `|θ| → ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FourierDecay {
    /// Faster than any power.
    Rapid,
    /// Like `|θ|^{-s}`.
    Power(f64),
    Unknown,
}

#[derive(Clone)]
pub enum Shape {
    /// `a · exp(-|x|²/w²)`
    GaussianBump { amplitude: f64, width: f64 },
    /// `1{|x| ≤ r}`
    IndicatorBall { radius: f64 },
    /// `½(1 + cos(π|x|/r))` on `|x| < r`
    CosineWindow { radius: f64 },
    /// `x_1 · exp(-|x|²/w²)`
    OddBump { width: f64 },
    /// The stable density `p_s` with index `alpha`.
    StableKernel { alpha: f64, time: f64 },
    Constant { value: f64 },
    Custom(CustomFunction),
}

#[derive(Clone, Copy, Debug)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub sup: f64,
}

#[derive(Clone)]
pub struct TestFunction {
    dim: usize,
    shape: Shape,
    cache: Arc<Cache>,
}

#[derive(Default)]
struct Cache {
    norms: OnceLock<Norms>,
    table: OnceLock<std::result::Result<FourierTable, String>>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name())
            .field("dim", &self.dim)
            .finish()
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} must be positive and finite")))
    }
}

impl TestFunction {
    pub fn new(dim: usize, shape: Shape) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        match &shape {
            Shape::GaussianBump { amplitude, width } => {
                if !amplitude.is_finite() {
                    return Err(Error::param("amplitude", "must be finite"));
                }
                positive("width", *width)?;
            }
            Shape::IndicatorBall { radius } | Shape::CosineWindow { radius } => {
                positive("radius", *radius)?
            }
            Shape::OddBump { width } => positive("width", *width)?,
            Shape::StableKernel { alpha, time } => {
                crate::stable_motion::StableParams::new(*alpha, dim)?;
                positive("time", *time)?;
            }
            Shape::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::param("value", "must be finite"));
                }
            }
            Shape::Custom(c) => {
                if let Some(r) = c.support_radius {
                    positive("support_radius", r)?;
                }
            }
        }
        Ok(Self {
            dim,
            shape,
            cache: Arc::new(Cache::default()),
        })
    }

    pub fn gaussian_bump(dim: usize, width: f64) -> Result<Self> {
        Self::new(
            dim,
            Shape::GaussianBump {
                amplitude: 1.0,
                width,
            },
        )
    }

    pub fn indicator_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, Shape::IndicatorBall { radius })
    }

    pub fn cosine_window(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, Shape::CosineWindow { radius })
    }

    pub fn odd_bump(dim: usize, width: f64) -> Result<Self> {
        Self::new(dim, Shape::OddBump { width })
    }

    pub fn stable_kernel(dim: usize, alpha: f64, time: f64) -> Result<Self> {
        Self::new(dim, Shape::StableKernel { alpha, time })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(dim, Shape::Constant { value })
    }

    pub fn custom(dim: usize, custom: CustomFunction) -> Result<Self> {
        Self::new(dim, Shape::Custom(custom))
    }

    /// Parses a catalog entry such as `gaussian-bump:width=0.5,amplitude=2`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut params: Vec<(String, f64)> = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value in `{item}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{v}` is not a number in `{spec}`")))?;
            params.push((k.trim().to_string(), v));
        }
        let allowed: &[&str] = match kind {
            "gaussian-bump" => &["width", "amplitude"],
            "indicator-ball" | "cosine-window" => &["radius"],
            "odd-bump" => &["width"],
            "stable-kernel" => &["alpha", "time"],
            "constant" => &["value"],
            other => return Err(Error::Config(format!("unknown test function `{other}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("`{kind}` has no parameter `{k}`")));
        }
        let get = |key: &str, default: f64| {
            params
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map_or(default, |(_, v)| *v)
        };
        let shape = match kind {
            "gaussian-bump" => Shape::GaussianBump {
                amplitude: get("amplitude", 1.0),
                width: get("width", 1.0),
            },
            "indicator-ball" => Shape::IndicatorBall {
                radius: get("radius", 1.0),
            },
            "cosine-window" => Shape::CosineWindow {
                radius: get("radius", 1.0),
            },
            "odd-bump" => Shape::OddBump {
                width: get("width", 1.0),
            },
            "stable-kernel" => Shape::StableKernel {
                alpha: get("alpha", 2.0),
                time: get("time", 1.0),
            },
            _ => Shape::Constant {
                value: get("value", 1.0),
            },
        };
        Self::new(dim, shape)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn name(&self) -> String {
        match &self.shape {
            Shape::GaussianBump { amplitude, width } if *amplitude == 1.0 => {
                format!("gaussian-bump:width={width}")
            }
            Shape::GaussianBump { amplitude, width } => {
                format!("gaussian-bump:width={width},amplitude={amplitude}")
            }
            Shape::IndicatorBall { radius } => format!("indicator-ball:radius={radius}"),
            Shape::CosineWindow { radius } => format!("cosine-window:radius={radius}"),
            Shape::OddBump { width } => format!("odd-bump:width={width}"),
            Shape::StableKernel { alpha, time } => {
                format!("stable-kernel:alpha={alpha},time={time}")
            }
            Shape::Constant { value } => format!("constant:value={value}"),
            Shape::Custom(c) => c.name.clone(),
        }
    }

    pub fn is_radial(&self) -> bool {
        match &self.shape {
            Shape::OddBump { .. } => false,
            Shape::Custom(c) => c.radial,
            _ => true,
        }
    }

    pub fn parity(&self) -> Parity {
        match &self.shape {
            Shape::OddBump { .. } => Parity::Odd,
            Shape::Custom(c) if c.radial => Parity::Even,
            Shape::Custom(c) => c.parity,
            _ => Parity::Even,
        }
    }

    pub fn is_constant_one(&self) -> bool {
        matches!(self.shape, Shape::Constant { value } if value == 1.0)
    }

    pub fn support_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::IndicatorBall { radius } | Shape::CosineWindow { radius } => Some(*radius),
            Shape::Custom(c) => c.support_radius,
            _ => None,
        }
    }

    /// A radius outside which `|f|` is negligible (below `1e-17` of its
    /// maximum) or zero; `None` when no such radius exists.
    pub fn effective_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::GaussianBump { width, .. } => Some(6.5 * width),
            Shape::OddBump { width } => Some(6.8 * width),
            Shape::Constant { value } if *value == 0.0 => Some(0.0),
            Shape::Constant { .. } | Shape::StableKernel { .. } => None,
            _ => self.support_radius(),
        }
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::GaussianBump { amplitude, width } => {
                amplitude * (-norm2(x) / (width * width)).exp()
            }
            Shape::IndicatorBall { radius } => {
                if norm2(x) <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::CosineWindow { radius } => {
                let r = norm2(x).sqrt();
                if r < *radius {
                    0.5 * (1.0 + (PI * r / radius).cos())
                } else {
                    0.0
                }
            }
            Shape::OddBump { width } => x[0] * (-norm2(x) / (width * width)).exp(),
            Shape::StableKernel { alpha, time } => {
                let params = crate::stable_motion::StableParams::new(*alpha, self.dim)
                    .expect("validated at construction");
                crate::analytics::transition_density(&params, *time, x).unwrap_or(f64::NAN)
            }
            Shape::Constant { value } => *value,
            Shape::Custom(c) => (c.eval)(x),
        }
    }

    /// Radial profile `F(r)` with `f(x) = F(|x|)`.
    pub fn radial_profile(&self, r: f64) -> Result<f64> {
        if !self.is_radial() {
            return Err(Error::Unsupported(format!("{} is not radial", self.name())));
        }
        let mut x = vec![0.0; self.dim];
        x[0] = r;
        Ok(self.evaluate(&x))
    }

    pub fn fourier_decay(&self) -> FourierDecay {
        let d = self.dim as f64;
        match &self.shape {
            Shape::GaussianBump { .. } | Shape::OddBump { .. } | Shape::StableKernel { .. } => {
                FourierDecay::Rapid
            }
            Shape::IndicatorBall { .. } => FourierDecay::Power((d + 1.0) / 2.0),
            Shape::CosineWindow { .. } => FourierDecay::Power((d + 1.0) / 2.0 + 2.0),
            Shape::Constant { .. } | Shape::Custom(_) => FourierDecay::Unknown,
        }
    }

    /// Whether a closed-form transform is available (no numerical table).
    pub fn has_closed_fourier(&self) -> bool {
        match &self.shape {
            Shape::CosineWindow { .. } | Shape::Constant { .. } => false,
            Shape::Custom(c) => c.fourier.is_some(),
            _ => true,
        }
    }

    /// A frequency beyond which `|f̂|` is negligible for quadrature purposes.
    pub fn frequency_cutoff(&self) -> f64 {
        match &self.shape {
            Shape::GaussianBump { width, .. } => 2.0 * 42f64.sqrt() / width,
            Shape::OddBump { width } => 2.0 * 46f64.sqrt() / width,
            Shape::StableKernel { alpha, time } => (42.0 / time).powf(1.0 / alpha),
            Shape::IndicatorBall { radius } => 2000.0 / radius,
            Shape::CosineWindow { radius } => RADIAL_TABLE_EXTENT / radius,
            Shape::Constant { .. } => 0.0,
            Shape::Custom(c) => match (&c.fourier, c.support_radius) {
                (None, Some(r)) if c.radial => RADIAL_TABLE_EXTENT / r,
                (None, _) => self.cache_fft_extent().unwrap_or(64.0),
                (Some(_), Some(r)) => 2000.0 / r,
                (Some(_), None) => 64.0,
            },
        }
    }

    fn cache_fft_extent(&self) -> Option<f64> {
        match self.cache.table.get() {
            Some(Ok(FourierTable::Line(t))) => Some(t.max_frequency()),
            _ => None,
        }
    }

    /// `f̂(θ)`.
    pub fn fourier(&self, theta: &[f64]) -> Result<Complex64> {
        let rho = norm2(theta).sqrt();
        match &self.shape {
            Shape::GaussianBump { .. }
            | Shape::IndicatorBall { .. }
            | Shape::StableKernel { .. }
            | Shape::CosineWindow { .. } => Ok(Complex64::new(self.radial_fourier(rho)?, 0.0)),
            Shape::OddBump { width } => {
                let w2 = width * width;
                let g = (PI.sqrt() * width).powi(self.dim as i32) * (-w2 * rho * rho / 4.0).exp();
                Ok(Complex64::new(0.0, -0.5 * w2 * theta[0] * g))
            }
            Shape::Constant { value } => {
                if *value == 0.0 {
                    Ok(Complex64::new(0.0, 0.0))
                } else {
                    Err(Error::Unsupported(
                        "a non-zero constant has no Fourier transform as a function".into(),
                    ))
                }
            }
            Shape::Custom(c) => {
                if let Some(fhat) = &c.fourier {
                    return Ok(fhat(theta));
                }
                if c.radial {
                    return Ok(Complex64::new(self.radial_fourier(rho)?, 0.0));
                }
                match self.table()? {
                    FourierTable::Line(t) => Ok(t.value(theta[0])),
                    FourierTable::Radial(_) => unreachable!("radial table for non-radial function"),
                }
            }
        }
    }

    /// `f̂` as a function of `|θ|` for radial `f` (real-valued).
    pub fn radial_fourier(&self, rho: f64) -> Result<f64> {
        let d = self.dim;
        match &self.shape {
            Shape::GaussianBump { amplitude, width } => Ok(amplitude
                * (PI.sqrt() * width).powi(d as i32)
                * (-width * width * rho * rho / 4.0).exp()),
            Shape::IndicatorBall { radius } => Ok(indicator_fourier(d, *radius, rho)),
            Shape::StableKernel { alpha, time } => Ok((-time * rho.powf(*alpha)).exp()),
            Shape::Constant { value } if *value == 0.0 => Ok(0.0),
            Shape::CosineWindow { .. } => match self.table()? {
                FourierTable::Radial(t) => Ok(t.value(rho)),
                FourierTable::Line(_) => unreachable!(),
            },
            Shape::Custom(c) if c.radial => {
                if let Some(fhat) = &c.fourier {
                    let mut th = vec![0.0; d];
                    th[0] = rho;
                    return Ok(fhat(&th).re);
                }
                match self.table()? {
                    FourierTable::Radial(t) => Ok(t.value(rho)),
                    FourierTable::Line(t) => Ok(t.value(rho).re),
                }
            }
            _ => Err(Error::Unsupported(format!("{} is not radial", self.name()))),
        }
    }

    fn table(&self) -> Result<&FourierTable> {
        self.cache
            .table
            .get_or_init(|| self.build_table().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Numerical(e.clone()))
    }

    fn build_table(&self) -> Result<FourierTable> {
        if self.is_radial() {
            let r = self.support_radius().ok_or_else(|| {
                Error::Unsupported(format!(
                    "{} has neither a closed-form transform nor a support radius",
                    self.name()
                ))
            })?;
            let profile = |s: f64| self.radial_profile(s).unwrap_or(f64::NAN);
            RadialTable::build(self.dim, r, &profile).map(FourierTable::Radial)
        } else if self.dim == 1 {
            let r = self.support_radius().ok_or_else(|| {
                Error::Unsupported(format!("{} needs a support radius", self.name()))
            })?;
            LineTable::build(r, &|x| self.evaluate(&[x]), 1e-10).map(FourierTable::Line)
        } else {
            Err(Error::Unsupported(format!(
                "numerical transform of the non-radial function {} in dimension {}",
                self.name(),
                self.dim
            )))
        }
    }

    /// `∫ f(y) y^k dy`; `+∞` when the moment does not converge absolutely.
    pub fn moment(&self, k: &MultiIndex) -> Result<f64> {
        if k.dim() != self.dim {
            return Err(Error::param(
                "k",
                format!("multi-index of dimension {} for a function on R^{}", k.dim(), self.dim),
            ));
        }
        let d = self.dim as f64;
        let order = k.order() as f64;
        Ok(match &self.shape {
            Shape::GaussianBump { amplitude, width } => {
                amplitude * k.components().iter().map(|&ki| gauss_moment(ki, *width)).product::<f64>()
            }
            Shape::OddBump { width } => {
                let c = k.components();
                gauss_moment(c[0] + 1, *width)
                    * c[1..].iter().map(|&ki| gauss_moment(ki, *width)).product::<f64>()
            }
            Shape::IndicatorBall { radius } => {
                sphere_monomial(k) * radius.powf(order + d) / (order + d)
            }
            Shape::CosineWindow { radius } => {
                let s = sphere_monomial(k);
                if s == 0.0 {
                    0.0
                } else {
                    s * cosine_radial_moment(*radius, order + d - 1.0)
                }
            }
            Shape::StableKernel { alpha, time } => stable_moment(k, *alpha, *time),
            Shape::Constant { value } => {
                if *value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Shape::Custom(c) => custom_moment(self, c, k)?,
        })
    }

    /// `λ(f) = ∫ f`.
    pub fn lebesgue_integral(&self) -> Result<f64> {
        self.moment(&MultiIndex::zero(self.dim))
    }

    pub fn norms(&self) -> Norms {
        *self.cache.norms.get_or_init(|| self.compute_norms())
    }

    pub fn l1_norm(&self) -> f64 {
        self.norms().l1
    }

    pub fn l2_norm(&self) -> f64 {
        self.norms().l2
    }

    pub fn sup_norm(&self) -> f64 {
        self.norms().sup
    }

    fn compute_norms(&self) -> Norms {
        let d = self.dim as f64;
        let di = self.dim as i32;
        match &self.shape {
            Shape::GaussianBump { amplitude, width } => Norms {
                l1: amplitude.abs() * (PI.sqrt() * width).powi(di),
                l2: amplitude.abs() * ((PI / 2.0).sqrt() * width).powf(d / 2.0),
                sup: amplitude.abs(),
            },
            Shape::OddBump { width } => {
                let w = *width;
                let l2sq = (PI.sqrt() / 2.0) * (w / 2f64.sqrt()).powi(3)
                    * ((PI / 2.0).sqrt() * w).powi(di - 1);
                Norms {
                    l1: w * w * (PI.sqrt() * w).powi(di - 1),
                    l2: l2sq.sqrt(),
                    sup: w / 2f64.sqrt() * (-0.5f64).exp(),
                }
            }
            Shape::IndicatorBall { radius } => {
                let vol = ball_volume(self.dim) * radius.powi(di);
                Norms {
                    l1: vol,
                    l2: vol.sqrt(),
                    sup: 1.0,
                }
            }
            Shape::CosineWindow { radius } => {
                let rule = GaussRule::legendre(64);
                let area = sphere_area(self.dim);
                let f = |r: f64| 0.5 * (1.0 + (PI * r / radius).cos());
                let l1 = area * rule.integrate(0.0, *radius, |r| f(r) * r.powi(di - 1));
                let l2 = (area * rule.integrate(0.0, *radius, |r| f(r).powi(2) * r.powi(di - 1)))
                    .sqrt();
                Norms { l1, l2, sup: 1.0 }
            }
            Shape::StableKernel { alpha, time } => {
                let theta0 = sphere_area(self.dim) * gamma(d / alpha) / alpha
                    / (2.0 * PI).powi(di);
                Norms {
                    l1: 1.0,
                    l2: ((2.0 * time).powf(-d / alpha) * theta0).sqrt(),
                    sup: time.powf(-d / alpha) * theta0,
                }
            }
            Shape::Constant { value } => Norms {
                l1: if *value == 0.0 { 0.0 } else { f64::INFINITY },
                l2: if *value == 0.0 { 0.0 } else { f64::INFINITY },
                sup: value.abs(),
            },
            Shape::Custom(c) => custom_norms(self, c),
        }
    }

    /// `f²` as a test function.
    pub fn squared(&self) -> Result<TestFunction> {
        match &self.shape {
            Shape::GaussianBump { amplitude, width } => Self::new(
                self.dim,
                Shape::GaussianBump {
                    amplitude: amplitude * amplitude,
                    width: width / 2f64.sqrt(),
                },
            ),
            Shape::IndicatorBall { .. } => Ok(self.clone()),
            Shape::Constant { value } => Self::constant(self.dim, value * value),
            _ => {
                let inner = self.clone();
                let eval: EvalFn = Arc::new(move |x: &[f64]| inner.evaluate(x).powi(2));
                Self::custom(
                    self.dim,
                    CustomFunction {
                        name: format!("({})^2", self.name()),
                        eval,
                        fourier: None,
                        support_radius: self.support_radius().or(self.effective_radius()),
                        radial: self.is_radial(),
                        parity: Parity::Even,
                    },
                )
            }
        }
    }
}

#[inline]
pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `∫_R y^k e^{-y²/w²} dy`
fn gauss_moment(k: u32, w: f64) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        gamma((k as f64 + 1.0) / 2.0) * w.powi(k as i32 + 1)
    }
}

/// `∫_0^R ½(1 + cos(πr/R)) r^m dr`
fn cosine_radial_moment(radius: f64, m: f64) -> f64 {
    let rule = GaussRule::legendre(64);
    rule.integrate(0.0, radius, |r| 0.5 * (1.0 + (PI * r / radius).cos()) * r.powf(m))
}

fn stable_moment(k: &MultiIndex, alpha: f64, time: f64) -> f64 {
    if k.order() == 0 {
        return 1.0;
    }
    if alpha == 2.0 {
        // Gaussian with variance 2·time per coordinate.
        return k
            .components()
            .iter()
            .map(|&ki| {
                if ki % 2 == 1 {
                    0.0
                } else {
                    let dfact: f64 = (1..ki).step_by(2).map(f64::from).product();
                    (2.0 * time).powf(ki as f64 / 2.0) * dfact
                }
            })
            .product();
    }
    if (k.order() as f64) < alpha {
        // Only |k| = 1 with α > 1 lands here; the density is even.
        0.0
    } else {
        f64::INFINITY
    }
}

fn indicator_fourier(d: usize, r: f64, rho: f64) -> f64 {
    let z = r * rho;
    match d {
        1 => 2.0 * r * sinc(z),
        2 => {
            let ratio = if z < 1e-4 {
                0.5 * (1.0 - z * z / 8.0)
            } else {
                bessel_j1(z) / z
            };
            2.0 * PI * r * r * ratio
        }
        3 => {
            let shape = if z < 1e-3 {
                let z2 = z * z;
                (1.0 - z2 / 10.0 + z2 * z2 / 280.0) / 3.0
            } else {
                (z.sin() - z * z.cos()) / (z * z * z)
            };
            4.0 * PI * r.powi(3) * shape
        }
        _ => {
            // (2πr/ρ)^{d/2} J_{d/2}(rρ) through the generic radial transform.
            let profile = |_: f64| 1.0;
            radial_forward(d, rho, r, &profile).unwrap_or(f64::NAN)
        }
    }
}

/// `∫_{R^d} e^{-iθ·x} F(|x|) dx` for `F` supported in `[0, r]`, as a function
/// of `ρ = |θ|`.
pub(crate) fn radial_forward(d: usize, rho: f64, r: f64, profile: &dyn Fn(f64) -> f64) -> Result<f64> {
    let area = sphere_area(d);
    let panels = ((rho * r / PI).ceil() as usize).max(1) + 1;
    let tol = Tolerance::with_rel(1e-12);
    let kernel = |s: f64| -> f64 {
        let z = rho * s;
        match d {
            1 => z.cos(),
            2 => bessel_j0(z),
            3 => sinc(z),
            _ => angular_average(d, z),
        }
    };
    let v = integrate(
        |s| kernel(s) * profile(s) * s.powi(d as i32 - 1),
        0.0,
        r,
        panels,
        &tol,
    )?;
    Ok(area * v.value)
}

/// `Γ(d/2)(2/z)^{d/2-1} J_{d/2-1}(z)`, the spherical average of `e^{iz ω_1}`,
/// evaluated from its power series (used only for `d > 3`).
fn angular_average(d: usize, z: f64) -> f64 {
    let nu = d as f64 / 2.0 - 1.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let q = -z * z / 4.0;
    for m in 1..400 {
        let mf = m as f64;
        term *= q / (mf * (mf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn custom_moment(f: &TestFunction, c: &CustomFunction, k: &MultiIndex) -> Result<f64> {
    let r = c.support_radius.ok_or_else(|| {
        Error::Unsupported(format!("moments of {} need a support radius", c.name))
    })?;
    let d = f.dim;
    if c.radial {
        let s = sphere_monomial(k);
        if s == 0.0 {
            return Ok(0.0);
        }
        let m = (k.order() as usize + d - 1) as i32;
        let v = integrate(
            |s| f.radial_profile(s).unwrap_or(f64::NAN) * s.powi(m),
            0.0,
            r,
            16,
            &Tolerance::with_rel(1e-11),
        )?;
        return Ok(s * v.value);
    }
    Ok(tensor_quadrature(d, r, |x| f.evaluate(x) * k.monomial(x)))
}

fn custom_norms(f: &TestFunction, c: &CustomFunction) -> Norms {
    let Some(r) = c.support_radius else {
        return Norms {
            l1: f64::NAN,
            l2: f64::NAN,
            sup: f64::NAN,
        };
    };
    let d = f.dim;
    let mut sup = 0.0f64;
    let (l1, l2sq) = if c.radial {
        let rule = GaussRule::legendre(64);
        let area = sphere_area(d);
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for panel in 0..8 {
            let a = r * panel as f64 / 8.0;
            let b = a + r / 8.0;
            for (s, w) in rule.mapped(a, b) {
                let v = f.radial_profile(s).unwrap_or(f64::NAN);
                sup = sup.max(v.abs());
                let jac = s.powi(d as i32 - 1);
                l1 += w * v.abs() * jac;
                l2 += w * v * v * jac;
            }
        }
        (area * l1, area * l2)
    } else {
        let l1 = tensor_quadrature(d, r, |x| {
            let v = f.evaluate(x);
            sup = sup.max(v.abs());
            v.abs()
        });
        let l2 = tensor_quadrature(d, r, |x| f.evaluate(x).powi(2));
        (l1, l2)
    };
    Norms {
        l1,
        l2: l2sq.sqrt(),
        sup,
    }
}

/// Tensor-product Gauss-Legendre over the cube `[-r, r]^d`.
fn tensor_quadrature(d: usize, r: f64, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
    let per_axis = match d {
        1 => 512,
        2 => 128,
        _ => 48,
    };
    let rule = GaussRule::legendre(per_axis);
    let pts: Vec<(f64, f64)> = rule.mapped(-r, r).collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for c in 0..d {
            x[c] = pts[idx[c]].0;
            w *= pts[idx[c]].1;
        }
        total += w * g(&x);
        let mut c = 0;
        loop {
            if c == d {
                return total;
            }
            idx[c] += 1;
            if idx[c] < pts.len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

const RADIAL_TABLE_EXTENT: f64 = 256.0;
const RADIAL_TABLE_STEP: f64 = 0.04;

enum FourierTable {
    Radial(RadialTable),
    Line(LineTable),
}

/// `f̂(ρ)` of a compactly supported radial function on a uniform ρ-grid.
struct RadialTable {
    step: f64,
    values: Vec<f64>,
}

impl RadialTable {
    fn build(d: usize, r: f64, profile: &dyn Fn(f64) -> f64) -> Result<Self> {
        let step = RADIAL_TABLE_STEP / r;
        let n = (RADIAL_TABLE_EXTENT / RADIAL_TABLE_STEP).ceil() as usize + 1;
        let values = (0..n)
            .map(|m| radial_forward(d, m as f64 * step, r, profile))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { step, values })
    }

    fn value(&self, rho: f64) -> f64 {
        // f̂ is even in ρ; mirror for the interpolation stencil.
        let u = rho.abs() / self.step;
        let n = self.values.len();
        if u > (n - 1) as f64 {
            return 0.0;
        }
        let at = |m: isize| self.values[m.unsigned_abs().min(n - 1)];
        lagrange6(u, at, n)
    }
}

/// Six-point Lagrange interpolation on a unit-spaced grid, with the stencil
/// shifted inwards at the top end.
fn lagrange6(u: f64, at: impl Fn(isize) -> f64, n: usize) -> f64 {
    let base = (u.floor() as isize - 2).min(n as isize - 6);
    let mut total = 0.0;
    for j in 0..6 {
        let xj = (base + j) as f64;
        let mut w = 1.0;
        for m in 0..6 {
            if m != j {
                let xm = (base + m) as f64;
                w *= (u - xm) / (xj - xm);
            }
        }
        total += w * at(base + j);
    }
    total
}

/// `f̂(θ)` of a compactly supported function on the line, computed by FFT of
/// a zero-padded trapezoid sum and refined by doubling the sample count.
struct LineTable {
    /// Frequency spacing `2π/L`.
    step: f64,
    /// Values at `θ = m·step` for `m = -(n/2)..n/2`, stored from the lowest.
    values: Vec<Complex64>,
}

impl LineTable {
    const PADDING: f64 = 64.0;

    fn build(r: f64, f: &dyn Fn(f64) -> f64, tol: f64) -> Result<Self> {
        let length = Self::PADDING * r;
        let mut prev: Option<Self> = None;
        let mut m = 1usize << 12;
        while m <= 1 << 22 {
            let table = Self::sample(length, m, f);
            if let Some(p) = &prev {
                let scale = table.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
                let half = p.values.len() as isize / 2;
                let worst = (-half..half)
                    .map(|k| (p.at(k) - table.at(k)).norm())
                    .fold(0.0, f64::max);
                if worst <= tol * scale {
                    return Ok(table);
                }
            }
            prev = Some(table);
            m *= 2;
        }
        Err(Error::Numerical(
            "Fourier transform did not settle under grid refinement".into(),
        ))
    }

    fn sample(length: f64, m: usize, f: &dyn Fn(f64) -> f64) -> Self {
        let h = length / m as f64;
        let mut buf: Vec<Complex64> = (0..m)
            .map(|n| Complex64::new(h * f(-0.5 * length + n as f64 * h), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        // x_n = -L/2 + n h contributes the phase e^{iπk} = (-1)^k at θ_k = 2πk/L.
        let half = m / 2;
        let mut values = Vec::with_capacity(m);
        for k in (0..m).map(|j| (j + half) % m) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            values.push(sign * buf[k]);
        }
        Self {
            step: 2.0 * PI / length,
            values,
        }
    }

    fn at(&self, k: isize) -> Complex64 {
        let half = self.values.len() as isize / 2;
        self.values[(k + half) as usize]
    }

    fn max_frequency(&self) -> f64 {
        self.step * (self.values.len() / 2 - 3) as f64
    }

    fn value(&self, theta: f64) -> Complex64 {
        let n = self.values.len();
        let half = (n / 2) as f64;
        let u = theta / self.step + half;
        if u < 2.0 || u > (n - 4) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let re = lagrange6(u, |j| self.values[j as usize].re, n);
        let im = lagrange6(u, |j| self.values[j as usize].im, n);
        Complex64::new(re, im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_catalog() {
        let f = TestFunction::parse("gaussian-bump:width=0.5,amplitude=2", 1).unwrap();
        assert_eq!(f.evaluate(&[0.0]), 2.0);
        assert_eq!(f.name(), "gaussian-bump:width=0.5,amplitude=2");
        assert!(TestFunction::parse("gaussian-bump:radius=1", 1).is_err());
        assert!(TestFunction::parse("nope", 1).is_err());
        assert!(TestFunction::parse("odd-bump:width=-1", 1).is_err());
        let c = TestFunction::parse("cosine-window", 2).unwrap();
        assert_eq!(c.support_radius(), Some(1.0));
    }

    #[test]
    fn gaussian_moment_zero_matches_fourier_at_zero() {
        for d in 1..=3 {
            let f = TestFunction::gaussian_bump(d, 0.7).unwrap();
            let m0 = f.lebesgue_integral().unwrap();
            let fh = f.fourier(&vec![0.0; d]).unwrap();
            assert!((m0 - fh.re).abs() < 1e-13 * m0);
            assert!((f.l1_norm() - m0).abs() < 1e-13 * m0);
        }
    }

    #[test]
    fn indicator_fourier_small_argument_is_continuous() {
        for d in 1..=3 {
            let f = TestFunction::indicator_ball(d, 1.3).unwrap();
            let a = f.radial_fourier(0.0).unwrap();
            assert!((a - f.l1_norm()).abs() < 1e-12 * a, "d={d}");
            let b = f.radial_fourier(2e-4).unwrap();
            let c = f.radial_fourier(2.1e-3).unwrap();
            assert!((a - b).abs() < 1e-6 && (b - c).abs() < 1e-5, "d={d}");
        }
    }

    #[test]
    fn cosine_window_table_matches_direct_transform() {
        // d=1 closed form: ∫_{-1}^{1} ½(1+cos πx) e^{-iθx} dx
        let f = TestFunction::cosine_window(1, 1.0).unwrap();
        for &th in &[0.0, 0.37, 1.0, 3.3, 12.9] {
            let exact = if th == 0.0 {
                1.0
            } else {
                let s = (th as f64).sin();
                s / th + 0.5 * ((PI - th).sin() / (PI - th) + (PI + th).sin() / (PI + th))
            };
            let got = f.radial_fourier(th).unwrap();
            assert!((got - exact).abs() < 1e-8, "θ={th}: {got} vs {exact}");
        }
    }

    #[test]
    fn line_fft_matches_odd_bump_closed_form() {
        let w = 0.8;
        let bump = TestFunction::odd_bump(1, w).unwrap();
        let inner = bump.clone();
        let custom = TestFunction::custom(
            1,
            CustomFunction {
                name: "odd".into(),
                eval: Arc::new(move |x: &[f64]| inner.evaluate(x)),
                fourier: None,
                support_radius: Some(7.0 * w),
                radial: false,
                parity: Parity::Odd,
            },
        )
        .unwrap();
        for &th in &[0.0, -0.5, 1.2, 4.0] {
            let a = bump.fourier(&[th]).unwrap();
            let b = custom.fourier(&[th]).unwrap();
            assert!((a - b).norm() < 1e-9, "θ={th}: {a} vs {b}");
        }
    }

    #[test]
    fn odd_bump_moments_and_norms() {
        let f = TestFunction::odd_bump(2, 1.0).unwrap();
        assert_eq!(f.lebesgue_integral().unwrap(), 0.0);
        let m = f.moment(&MultiIndex::new(vec![1, 0])).unwrap();
        // ∫ y² e^{-y²} dy · ∫ e^{-z²} dz = (√π/2)·√π
        assert!((m - PI / 2.0).abs() < 1e-13);
        // sup of y e^{-y²} is e^{-1/2}/√2
        assert!((f.sup_norm() - (-0.5f64).exp() / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn squared_gaussian_is_gaussian() {
        let f = TestFunction::gaussian_bump(1, 1.0).unwrap();
        let g = f.squared().unwrap();
        for &x in &[0.0, 0.3, 1.7] {
            assert!((g.evaluate(&[x]) - f.evaluate(&[x]).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn stable_kernel_moments() {
        let f = TestFunction::stable_kernel(1, 2.0, 1.5).unwrap();
        assert_eq!(f.moment(&MultiIndex::new(vec![2])).unwrap(), 3.0);
        let c = TestFunction::stable_kernel(1, 1.0, 1.0).unwrap();
        assert!(c.moment(&MultiIndex::new(vec![2])).unwrap().is_infinite());
        assert_eq!(c.moment(&MultiIndex::new(vec![0])).unwrap(), 1.0);
    }
}
