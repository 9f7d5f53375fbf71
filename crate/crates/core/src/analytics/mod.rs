//! Deterministic numerics for the stable kernel and its semigroup.
//!
//! Everything here goes through Fourier space, where the semigroup is the
//! multiplier `e^{-t|θ|^α}`. Radially symmetric integrands reduce to
//! one-dimensional Hankel-type integrals.

mod fourier;
mod integrability;
mod tables;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::quadrature::{integrate, GaussRule, Tolerance};
use crate::special::{gamma, sphere_area, sphere_monomial};
use crate::stable_motion::{Regime, StableParams};
use crate::test_function::{FourierDecay, Parity, Shape, TestFunction};

pub(crate) use fourier::{inverse, Plan, Spectrum};
pub use integrability::{check_phi_integrability, check_phi_integrability_to, Verdict, VerdictKind};
pub use tables::{constants_table, write_constants_csv, ConstantRow};

/// Numerical settings for Fourier quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Frequency cut-off `R`; chosen from the integrand when `None`.
    pub extent: Option<f64>,
    /// Grid points per axis for tabulated transforms (a power of two).
    pub points: usize,
    /// Relative tolerance of the adaptive quadrature.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            extent: None,
            points: 4096,
            tolerance: 1e-11,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.points.is_power_of_two() {
            return Err(Error::param("points", format!("{} is not a power of two", self.points)));
        }
        if let Some(r) = self.extent {
            if !(r > 0.0) {
                return Err(Error::param("extent", format!("{r} must be positive")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        Ok(())
    }

    fn tol(&self) -> Tolerance {
        Tolerance::with_rel(self.tolerance)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param("t", format!("{t} must be positive and finite")))
    }
}

fn check_point(params: &StableParams, x: &[f64]) -> Result<()> {
    if x.len() != params.dim() {
        return Err(Error::param(
            "x",
            format!("expected {} coordinates, got {}", params.dim(), x.len()),
        ));
    }
    if params.dim() > 3 {
        return Err(Error::Unsupported(format!(
            "kernel numerics in dimension {}",
            params.dim()
        )));
    }
    Ok(())
}

/// `ρ` with `t ρ^α = level`: beyond it `e^{-tρ^α} < e^{-level}`.
fn kernel_extent(params: &StableParams, t: f64, level: f64) -> f64 {
    (level / t).powf(1.0 / params.alpha())
}

fn kernel_weight(params: &StableParams, t: f64) -> impl Fn(f64) -> f64 + Sync {
    let a = params.alpha();
    move |rho: f64| (-t * rho.powf(a)).exp()
}

/// `p_t(x) = (2π)^{-d} ∫ e^{ix·θ - t|θ|^α} dθ`.
pub fn transition_density(params: &StableParams, t: f64, x: &[f64]) -> Result<f64> {
    transition_density_with(params, t, x, &QuadratureSpec::default())
}

pub fn transition_density_with(
    params: &StableParams,
    t: f64,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_time(t)?;
    check_point(params, x)?;
    spec.validate()?;
    let extent = spec.extent.unwrap_or_else(|| kernel_extent(params, t, 42.0));
    let plan = Plan::new(extent, spec.tol()).with_scale(t.powf(-1.0 / params.alpha()));
    let w = kernel_weight(params, t);
    let v = inverse(params.dim(), x, &w, Spectrum::Radial(&|_| 1.0), &plan)?;
    Ok(v.value.max(0.0))
}

fn real_part(v: &crate::quadrature::Integral, what: &str) -> Result<f64> {
    if v.imag.abs() > 1e-8 * v.mass.max(v.value.abs()) + 1e-300 {
        return Err(Error::Numerical(format!(
            "{what}: imaginary part {:e} is not negligible (mass {:e})",
            v.imag, v.mass
        )));
    }
    Ok(v.value)
}

/// `(iθ)^k`
fn i_theta_pow(k: &MultiIndex, theta: &[f64]) -> Complex64 {
    let n = k.order() % 4;
    let ipow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][n as usize];
    ipow * k.monomial(theta)
}

/// `∂^k p_t(x) = (2π)^{-d} ∫ (iθ)^k e^{ix·θ - t|θ|^α} dθ`.
pub fn density_derivative(params: &StableParams, t: f64, x: &[f64], k: &MultiIndex) -> Result<f64> {
    check_time(t)?;
    check_point(params, x)?;
    if k.dim() != params.dim() {
        return Err(Error::param("k", "multi-index dimension differs from the motion's"));
    }
    if k.order() == 0 {
        return transition_density(params, t, x);
    }
    let order = k.order() as f64;
    let level = 45.0 + 4.0 * order / params.alpha();
    let plan = Plan::new(kernel_extent(params, t, level), Tolerance::with_rel(1e-11))
        .with_scale(t.powf(-1.0 / params.alpha()));
    let w = kernel_weight(params, t);
    let hat = |th: &[f64]| i_theta_pow(k, th);
    let v = inverse(
        params.dim(),
        x,
        &w,
        Spectrum::General {
            hat: &hat,
            band: k.order() as usize,
        },
        &plan,
    )?;
    real_part(&v, "density derivative")
}

/// `ϑ^k = (2π)^{-d} ∫ e^{-|θ|^α} θ^k dθ`, in closed form.
pub fn theta_const(params: &StableParams, k: &MultiIndex) -> f64 {
    if k.has_odd_component() {
        return 0.0;
    }
    let d = params.dim() as f64;
    let a = params.alpha();
    (2.0 * PI).powf(-d) * sphere_monomial(k) * gamma((k.order() as f64 + d) / a) / a
}

/// `γ_d(t)`: `t^{1-d/α}`, `ln(t ∨ 1)` or `1` in low, critical and high
/// dimension.
pub fn gamma_d(params: &StableParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("{t} must be non-negative")));
    }
    let d = params.dim() as f64;
    Ok(match params.regime() {
        Regime::Low => t.powf(1.0 - d / params.alpha()),
        Regime::Critical => t.max(1.0).ln(),
        Regime::High => 1.0,
    })
}

/// `κ_d(α)`, defined for `d ≤ α`.
pub fn kappa_d(params: &StableParams) -> Result<f64> {
    let d = params.dim() as f64;
    let a = params.alpha();
    let base = (2.0 * PI).powf(-d) * sphere_area(params.dim()) * gamma(d / a) / a;
    match params.regime() {
        Regime::Low => Ok(base * a / (a - d)),
        Regime::Critical => Ok(base),
        Regime::High => Err(Error::Unsupported(format!(
            "kappa is undefined in high dimension (d = {} > alpha = {a})",
            params.dim()
        ))),
    }
}

fn angular_band(f: &TestFunction) -> usize {
    match f.shape() {
        Shape::OddBump { .. } => 1,
        _ if f.is_radial() => 0,
        _ => 8,
    }
}

/// `(2π)^{-d} ∫ e^{ix·θ} w(|θ|) f̂(θ) dθ` with the route chosen by the
/// symmetry of `f`.
fn apply_multiplier(
    f: &TestFunction,
    x: &[f64],
    weight: &(dyn Fn(f64) -> f64 + Sync),
    plan: &Plan,
) -> Result<f64> {
    if f.is_radial() {
        let g = |rho: f64| f.radial_fourier(rho).unwrap_or(f64::NAN);
        // Surface errors from the transform before integrating.
        f.radial_fourier(0.0)?;
        let v = inverse(f.dim(), x, weight, Spectrum::Radial(&g), plan)?;
        Ok(v.value)
    } else {
        let mut zero = vec![0.0; f.dim()];
        zero[0] = 1.0;
        f.fourier(&zero)?;
        let hat = |th: &[f64]| f.fourier(th).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let v = inverse(
            f.dim(),
            x,
            weight,
            Spectrum::General {
                hat: &hat,
                band: angular_band(f),
            },
            plan,
        )?;
        real_part(&v, "semigroup")
    }
}

fn check_function(params: &StableParams, f: &TestFunction) -> Result<()> {
    if f.dim() != params.dim() {
        return Err(Error::param(
            "f",
            format!("test function on R^{} for motion on R^{}", f.dim(), params.dim()),
        ));
    }
    Ok(())
}

/// `T_t f(x) = (2π)^{-d} ∫ e^{ix·θ - t|θ|^α} f̂(θ) dθ`.
pub fn semigroup_apply(params: &StableParams, t: f64, f: &TestFunction, x: &[f64]) -> Result<f64> {
    check_time(t)?;
    check_point(params, x)?;
    check_function(params, f)?;
    if let Shape::Constant { value } = f.shape() {
        return Ok(*value);
    }
    if !f.has_closed_fourier() && f.support_radius().is_none() {
        return Err(Error::Unsupported(format!(
            "{} has neither a Fourier transform nor a support radius",
            f.name()
        )));
    }
    let extent = kernel_extent(params, t, 42.0).min(f.frequency_cutoff());
    let plan = Plan::new(extent, Tolerance::with_rel(1e-11))
        .with_scale(t.powf(-1.0 / params.alpha()))
        .with_spread(f.effective_radius().unwrap_or(0.0));
    apply_multiplier(f, x, &kernel_weight(params, t), &plan)
}

/// `(2π)^{-d} ∫ e^{ix·θ - t|θ|^α} m(|θ|) f̂(θ) dθ` for a real radial multiplier
/// `m` negligible beyond `m_extent`; this is `∫ T_t f(x + y) ν(dy)` when `m` is
/// the characteristic function of a symmetric law `ν`.
pub(crate) fn semigroup_apply_damped(
    params: &StableParams,
    t: f64,
    f: &TestFunction,
    x: &[f64],
    m: &(dyn Fn(f64) -> f64 + Sync),
    m_extent: f64,
) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("{t} must be non-negative and finite")));
    }
    check_point(params, x)?;
    check_function(params, f)?;
    if let Shape::Constant { value } = f.shape() {
        return Ok(value * m(0.0));
    }
    let mut extent = m_extent.min(f.frequency_cutoff());
    let mut scale = 1.0 / m_extent;
    if t > 0.0 {
        extent = extent.min(kernel_extent(params, t, 42.0));
        scale = scale.max(t.powf(-1.0 / params.alpha()));
    }
    let plan = Plan::new(extent, Tolerance::with_rel(1e-11))
        .with_scale(scale)
        .with_spread(f.effective_radius().unwrap_or(0.0));
    let k = kernel_weight(params, t);
    apply_multiplier(f, x, &|rho| k(rho) * m(rho), &plan)
}

/// `T_t f(x) = ∫ p_t(x - y) f(y) dy` by direct quadrature in `d = 1`; an
/// independent route used to cross-check [`semigroup_apply`].
pub fn semigroup_apply_convolution(
    params: &StableParams,
    t: f64,
    f: &TestFunction,
    x: &[f64],
) -> Result<f64> {
    check_time(t)?;
    check_point(params, x)?;
    check_function(params, f)?;
    if params.dim() != 1 {
        return Err(Error::Unsupported("convolution route is one-dimensional".into()));
    }
    let r = f.effective_radius().ok_or_else(|| {
        Error::Unsupported(format!("{} has no effective support", f.name()))
    })?;
    let x0 = x[0];
    let mut breaks = vec![-r, r];
    if x0 > -r && x0 < r {
        breaks.insert(1, x0);
    }
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let v = integrate(
            |y| transition_density(params, t, &[x0 - y]).unwrap_or(f64::NAN) * f.evaluate(&[y]),
            w[0],
            w[1],
            8,
            &Tolerance::with_rel(1e-10),
        )?;
        total += v.value;
    }
    Ok(total)
}

/// `∫_0^t T_s f(x) ds = (2π)^{-d} ∫ e^{ix·θ} (1 - e^{-t|θ|^α}) |θ|^{-α} f̂(θ) dθ`.
pub fn integrated_semigroup(params: &StableParams, t: f64, f: &TestFunction, x: &[f64]) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("{t} must be non-negative and finite")));
    }
    check_point(params, x)?;
    check_function(params, f)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if let Shape::Constant { value } = f.shape() {
        return Ok(value * t);
    }
    let d = params.dim() as f64;
    let a = params.alpha();
    if let FourierDecay::Power(s) = f.fourier_decay() {
        if s <= d - a {
            return Err(Error::Divergent(format!(
                "∫|f̂(θ)||θ|^(-α) dθ diverges at infinity for {}",
                f.name()
            )));
        }
    }
    let weight = move |rho: f64| {
        if rho == 0.0 {
            t
        } else {
            let ra = rho.powf(a);
            -(-t * ra).exp_m1() / ra
        }
    };
    let plan = Plan::new(f.frequency_cutoff(), Tolerance::with_rel(1e-10))
        .with_scale(t.powf(-1.0 / a))
        .with_spread(f.effective_radius().unwrap_or(0.0));
    apply_multiplier(f, x, &weight, &plan)
}

/// `(2π)^{-d} ∫ e^{ix·θ} |θ|^{-α} f̂(θ) dθ`, the `t → ∞` limit of
/// [`integrated_semigroup`] in high dimension.
pub fn potential_apply(params: &StableParams, f: &TestFunction, x: &[f64]) -> Result<f64> {
    check_point(params, x)?;
    check_function(params, f)?;
    if params.regime() != Regime::High {
        return Err(Error::Divergent(
            "the potential of a test function is finite only for d > alpha".into(),
        ));
    }
    let n = norm_nd(params, f)?;
    if !n.is_finite() {
        return Err(Error::Divergent(format!("N_d({}) is infinite", f.name())));
    }
    let a = params.alpha();
    let weight = move |rho: f64| if rho == 0.0 { 0.0 } else { rho.powf(-a) };
    let plan = Plan::new(f.frequency_cutoff(), Tolerance::with_rel(1e-9))
        .with_scale(1e-6)
        .with_spread(f.effective_radius().unwrap_or(0.0));
    apply_multiplier(f, x, &weight, &plan)
}

/// `𝒩_d(f)` in each dimension regime; `+∞` when the defining integral
/// diverges.
pub fn norm_nd(params: &StableParams, f: &TestFunction) -> Result<f64> {
    check_function(params, f)?;
    if let Shape::Constant { value } = f.shape() {
        return Ok(if *value == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let l1 = f.l1_norm();
    match params.regime() {
        Regime::Low => Ok(l1),
        Regime::Critical => Ok(l1 + fourier_potential_norm(params, f)?),
        Regime::High => fourier_potential_norm(params, f),
    }
}

/// `∫ |f̂(θ)| |θ|^{-α} dθ`.
pub fn fourier_potential_norm(params: &StableParams, f: &TestFunction) -> Result<f64> {
    check_function(params, f)?;
    let d = params.dim() as f64;
    let a = params.alpha();
    let lambda = f.lebesgue_integral()?;
    let l1 = f.l1_norm();
    if l1 == 0.0 {
        return Ok(0.0);
    }
    // Near θ = 0 the integrand behaves like |f̂(0)| ρ^{d-1-α}, or one power
    // better when f̂(0) = 0 by oddness.
    let vanishing = if lambda.abs() <= 1e-13 * l1 {
        if f.parity() == Parity::Odd {
            1.0
        } else {
            2.0
        }
    } else {
        0.0
    };
    if d - a + vanishing <= 0.0 {
        return Ok(f64::INFINITY);
    }
    if let FourierDecay::Power(s) = f.fourier_decay() {
        if s <= d - a {
            return Ok(f64::INFINITY);
        }
    }
    let cutoff = f.frequency_cutoff();
    let shell = |rho: f64| -> Result<f64> { angular_abs(f, rho) };
    let exponent = d - a + vanishing;
    // ρ = u^{1/e} absorbs the power ρ^{d-1-α+v} into the Jacobian.
    let e = exponent;
    let u_max = cutoff.powf(e);
    let mut err: Option<Error> = None;
    let v = integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let rho = u.powf(1.0 / e);
            match shell(rho) {
                Ok(s) => s * rho.powf(d - 1.0 - a) * rho.powf(1.0 - e) / e,
                Err(x) => {
                    err.get_or_insert(x);
                    0.0
                }
            }
        },
        0.0,
        u_max,
        64,
        &Tolerance::with_rel(1e-9),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(v.value)
}

/// `∫_{S^{d-1}} |f̂(ρω)| dσ(ω)`.
fn angular_abs(f: &TestFunction, rho: f64) -> Result<f64> {
    let d = f.dim();
    if f.is_radial() {
        return Ok(sphere_area(d) * f.radial_fourier(rho)?.abs());
    }
    match d {
        1 => Ok(f.fourier(&[rho])?.norm() + f.fourier(&[-rho])?.norm()),
        2 => {
            let n = 512;
            let mut s = 0.0;
            for j in 0..n {
                let psi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                s += f.fourier(&[rho * psi.cos(), rho * psi.sin()])?.norm();
            }
            Ok(s * 2.0 * PI / n as f64)
        }
        3 => {
            let rule = GaussRule::legendre(48);
            let n = 128;
            let mut s = 0.0;
            for (&u, &wu) in rule.nodes().iter().zip(rule.weights()) {
                let q = (1.0 - u * u).sqrt();
                for j in 0..n {
                    let psi = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                    let th = [rho * q * psi.cos(), rho * q * psi.sin(), rho * u];
                    s += wu * f.fourier(&th)?.norm();
                }
            }
            Ok(s * 2.0 * PI / n as f64)
        }
        _ => Err(Error::Unsupported(format!("angular quadrature in dimension {d}"))),
    }
}

fn check_moments(f: &TestFunction, order: u32) -> Result<Vec<(MultiIndex, f64)>> {
    let mut out = Vec::new();
    for k in MultiIndex::up_to_order(f.dim(), order) {
        let m = f.moment(&k)?;
        if !m.is_finite() {
            return Err(Error::Divergent(format!(
                "moment {k} of {} does not converge",
                f.name()
            )));
        }
        out.push((k, m));
    }
    Ok(out)
}

/// `L_t f(x) = Σ_{|k| ≤ N} (-1)^{|k|}/k! (∫ f(y) y^k dy) ∂^k p_t(x)`.
pub fn expansion_apply(
    params: &StableParams,
    t: f64,
    f: &TestFunction,
    order: u32,
    x: &[f64],
) -> Result<f64> {
    check_time(t)?;
    check_point(params, x)?;
    check_function(params, f)?;
    let mut total = 0.0;
    for (k, m) in check_moments(f, order)? {
        if m == 0.0 {
            continue;
        }
        let sign = if k.order() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign / k.factorial() * m * density_derivative(params, t, x, &k)?;
    }
    Ok(total)
}

/// `T_t f(x) - L_t f(x)`, computed in one Fourier integral against the
/// Taylor remainder of `f̂` at the origin, which avoids cancelling two
/// nearly equal numbers.
pub fn expansion_residual(
    params: &StableParams,
    t: f64,
    f: &TestFunction,
    order: u32,
    x: &[f64],
) -> Result<f64> {
    check_time(t)?;
    check_point(params, x)?;
    check_function(params, f)?;
    let residual = Residual::new(params, t, f, order)?;
    residual.at(x)
}

struct Residual<'a> {
    f: &'a TestFunction,
    moments: Vec<(MultiIndex, f64)>,
    radial_coeffs: Vec<(i32, f64)>,
    plan: Plan,
    weight: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    band: usize,
}

impl<'a> Residual<'a> {
    fn new(params: &StableParams, t: f64, f: &'a TestFunction, order: u32) -> Result<Self> {
        if matches!(f.shape(), Shape::Constant { .. }) {
            return Err(Error::Divergent(format!("{} has divergent moments", f.name())));
        }
        let moments = check_moments(f, order)?;
        // For radial f the Taylor polynomial of f̂ is radial:
        // Σ_{n even} (-1)^{n/2}/n! ρ^n ∫ f(y) y_1^n dy.
        let mut radial_coeffs = Vec::new();
        if f.is_radial() {
            for n in (0..=order).step_by(2) {
                let mut k = vec![0u32; f.dim()];
                k[0] = n;
                let m = f.moment(&MultiIndex::new(k))?;
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let fact: f64 = (1..=n).map(f64::from).product();
                radial_coeffs.push((n as i32, sign * m / fact));
            }
        }
        let a = params.alpha();
        let level = 70.0 + 2.0 * order as f64 / a * 70f64.ln();
        let mut plan = Plan::new(kernel_extent(params, t, level), Tolerance::with_rel(1e-10))
            .with_scale(t.powf(-1.0 / a))
            .with_spread(f.effective_radius().unwrap_or(0.0));
        plan.tol.abs = roundoff_floor(params, t, f, &moments, &plan);
        Ok(Self {
            f,
            moments,
            radial_coeffs,
            plan,
            weight: Box::new(kernel_weight(params, t)),
            band: angular_band(f) + order as usize,
        })
    }

    fn at(&self, x: &[f64]) -> Result<f64> {
        let f = self.f;
        if f.is_radial() {
            let g = |rho: f64| {
                let poly: f64 = self
                    .radial_coeffs
                    .iter()
                    .map(|&(n, c)| c * rho.powi(n))
                    .sum();
                f.radial_fourier(rho).unwrap_or(f64::NAN) - poly
            };
            let v = inverse(f.dim(), x, &*self.weight, Spectrum::Radial(&g), &self.plan)?;
            Ok(v.value)
        } else {
            let hat = |th: &[f64]| {
                let mut p = Complex64::new(0.0, 0.0);
                for (k, m) in &self.moments {
                    if *m != 0.0 {
                        let sign = if k.order() % 2 == 0 { 1.0 } else { -1.0 };
                        p += i_theta_pow(k, th) * (sign * m / k.factorial());
                    }
                }
                f.fourier(th).unwrap_or(Complex64::new(f64::NAN, 0.0)) - p
            };
            let v = inverse(
                f.dim(),
                x,
                &*self.weight,
                Spectrum::General {
                    hat: &hat,
                    band: self.band,
                },
                &self.plan,
            )?;
            real_part(&v, "expansion residual")
        }
    }
}

/// Size of the rounding noise in `f̂ - Taylor polynomial` integrated
/// against the kernel: below it the residual cannot be resolved.
fn roundoff_floor(
    params: &StableParams,
    t: f64,
    f: &TestFunction,
    moments: &[(MultiIndex, f64)],
    plan: &Plan,
) -> f64 {
    let d = params.dim();
    let w = kernel_weight(params, t);
    let l1 = f.l1_norm();
    let bound = |rho: f64| {
        let poly: f64 = moments
            .iter()
            .map(|(k, m)| (m / k.factorial()).abs() * rho.powi(k.order() as i32))
            .sum();
        w(rho) * (l1 + poly) * rho.powi(d as i32 - 1)
    };
    let rule = GaussRule::legendre(32);
    let mut edges = vec![0.0];
    edges.extend(plan.breaks.iter().copied().filter(|&b| b < plan.extent));
    edges.push(plan.extent);
    let total: f64 = edges
        .windows(2)
        .map(|e| rule.integrate(e[0], e[1], bound))
        .sum();
    16.0 * f64::EPSILON * sphere_area(d) / (2.0 * PI).powi(d as i32) * total
}

/// Evaluation grid on which the supremum in [`expansion_error`] is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupGrid {
    /// Points per axis.
    pub points: usize,
    /// Half-width in units of `t^{1/α}`.
    pub half_width: f64,
    /// Points per axis for non-radial functions in `d = 2`.
    pub points_2d: usize,
}

impl Default for SupGrid {
    fn default() -> Self {
        Self {
            points: 2049,
            half_width: 10.0,
            points_2d: 129,
        }
    }
}

/// `t^{(N+d)/α} sup_x |T_t f(x) - L_t f(x)|` over the default grid.
pub fn expansion_error(params: &StableParams, t: f64, f: &TestFunction, order: u32) -> Result<f64> {
    expansion_error_on(params, t, f, order, &SupGrid::default())
}

pub fn expansion_error_on(
    params: &StableParams,
    t: f64,
    f: &TestFunction,
    order: u32,
    grid: &SupGrid,
) -> Result<f64> {
    check_time(t)?;
    check_function(params, f)?;
    if params.dim() > 2 {
        return Err(Error::Unsupported(
            "supremum grids are provided for d <= 2 only".into(),
        ));
    }
    if grid.points < 2 {
        return Err(Error::param("points", "need at least two grid points"));
    }
    let residual = Residual::new(params, t, f, order)?;
    let half = grid.half_width * t.powf(1.0 / params.alpha());
    let n = grid.points;
    let axis: Vec<f64> = (0..n)
        .map(|j| -half + 2.0 * half * j as f64 / (n - 1) as f64)
        .collect();
    let symmetric = f.parity() != Parity::None;
    let points: Vec<Vec<f64>> = match params.dim() {
        1 => axis
            .iter()
            .filter(|&&x| !symmetric || x >= 0.0)
            .map(|&x| vec![x])
            .collect(),
        _ if f.is_radial() => {
            // The residual is radial; cover the square's radii.
            let rmax = half * 2f64.sqrt();
            (0..n)
                .map(|j| vec![rmax * j as f64 / (n - 1) as f64, 0.0])
                .collect()
        }
        _ => {
            let m = grid.points_2d.max(2);
            let mut pts = Vec::with_capacity(m * m);
            for i in 0..m {
                for j in 0..m {
                    let x = -half + 2.0 * half * i as f64 / (m - 1) as f64;
                    let y = -half + 2.0 * half * j as f64 / (m - 1) as f64;
                    if !symmetric || x > 0.0 || (x == 0.0 && y >= 0.0) {
                        pts.push(vec![x, y]);
                    }
                }
            }
            pts
        }
    };
    let values: Vec<f64> = points
        .par_iter()
        .map(|x| residual.at(x).map(f64::abs))
        .collect::<Result<Vec<_>>>()?;
    let sup = values.into_iter().fold(0.0, f64::max);
    let scale = t.powf((order as f64 + params.dim() as f64) / params.alpha());
    Ok(scale * sup)
}

/// `sup_x |T_t g(x)|`. Attained at the origin for radially decreasing `g`;
/// otherwise taken over a grid in `d = 1`, or bounded by `sup |g|`.
pub fn semigroup_sup(params: &StableParams, t: f64, g: &TestFunction) -> Result<f64> {
    check_time(t)?;
    check_function(params, g)?;
    let d = params.dim();
    let radially_decreasing = matches!(
        g.shape(),
        Shape::GaussianBump { amplitude, .. } if *amplitude >= 0.0
    ) || matches!(
        g.shape(),
        Shape::IndicatorBall { .. } | Shape::CosineWindow { .. } | Shape::StableKernel { .. }
    );
    if radially_decreasing {
        return semigroup_apply(params, t, g, &vec![0.0; d]);
    }
    if let Shape::Constant { value } = g.shape() {
        return Ok(value.abs());
    }
    if d != 1 {
        return Ok(g.sup_norm());
    }
    let half = 5.0 * t.powf(1.0 / params.alpha()) + g.effective_radius().unwrap_or(0.0);
    let n = 201;
    let mut best = 0.0f64;
    for j in 0..n {
        let x = -half + 2.0 * half * j as f64 / (n - 1) as f64;
        best = best.max(semigroup_apply(params, t, g, &[x])?.abs());
    }
    Ok(best)
}
