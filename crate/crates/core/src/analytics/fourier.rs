//! Inverse Fourier integrals `(2π)^{-d} ∫ e^{ix·θ} w(|θ|) h(θ) dθ`.
//!
//! Radial integrands reduce to a one-dimensional Hankel-type integral. The
//! general case integrates over `ρ = |θ|` with an angular rule aligned with
//! `x`, so the oscillation `e^{iρ x·ω}` depends on as few angles as possible.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_pair_breaks, GaussRule, Integral, Tolerance};
use crate::special::{bessel_j0, sinc, sphere_area};
use crate::test_function::norm2;

pub(crate) type RadialFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);
pub(crate) type HatFn<'a> = &'a (dyn Fn(&[f64]) -> Complex64 + Sync);

#[derive(Clone, Copy)]
pub(crate) enum Spectrum<'a> {
    /// `h(θ) = g(|θ|)`, real.
    Radial(RadialFn<'a>),
    /// A general `h`; `band` bounds the angular frequency content of
    /// `ω ↦ h(ρω)`.
    General { hat: HatFn<'a>, band: usize },
}

/// Integration setup for one inverse transform.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    /// Frequency cut-off `R`.
    pub extent: f64,
    /// Interior breakpoints in `(0, R)` where the integrand changes scale.
    pub breaks: Vec<f64>,
    /// Spatial scale of `h` (its effective support radius), used to size the
    /// initial panels.
    pub spread: f64,
    pub tol: Tolerance,
}

impl Plan {
    pub fn new(extent: f64, tol: Tolerance) -> Self {
        Self {
            extent,
            breaks: Vec::new(),
            spread: 0.0,
            tol,
        }
    }

    /// Adds geometric breakpoints `s, 4s, 16s, ...` below the extent.
    pub fn with_scale(mut self, s: f64) -> Self {
        let mut b = s;
        while b < self.extent && self.breaks.len() < 12 {
            if b > 0.0 {
                self.breaks.push(b);
            }
            b *= 4.0;
        }
        self
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.spread = spread;
        self
    }

    fn grid(&self) -> Vec<f64> {
        let mut g = vec![0.0];
        let mut inner: Vec<f64> = self
            .breaks
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < self.extent)
            .collect();
        inner.sort_by(f64::total_cmp);
        g.extend(inner);
        g.push(self.extent);
        g
    }

    fn panels(&self, r: f64) -> usize {
        // Roughly one panel per half oscillation of the fastest phase, spread
        // over the gaps of the grid.
        let gaps = self.breaks.len() + 1;
        let oscill = (self.extent * (r + self.spread) / PI).ceil() as usize;
        (oscill / gaps).max(4) + 1
    }
}

/// `(2π)^{-d} ∫_{R^d} e^{ix·θ} w(|θ|) h(θ) dθ`.
pub(crate) fn inverse(
    dim: usize,
    x: &[f64],
    weight: RadialFn<'_>,
    spectrum: Spectrum<'_>,
    plan: &Plan,
) -> Result<Integral> {
    let r = norm2(x).sqrt();
    match spectrum {
        Spectrum::Radial(g) => radial_inverse(dim, r, &|rho| weight(rho) * g(rho), plan),
        Spectrum::General { hat, band } => general_inverse(dim, x, weight, hat, band, plan),
    }
}

/// `(2π)^{-d} ∫ e^{ix·θ} G(|θ|) dθ` at `|x| = r`.
pub(crate) fn radial_inverse(dim: usize, r: f64, g: &dyn Fn(f64) -> f64, plan: &Plan) -> Result<Integral> {
    let c = sphere_area(dim) / (2.0 * PI).powi(dim as i32);
    let di = dim as i32 - 1;
    let kernel = |z: f64| match dim {
        1 => z.cos(),
        2 => bessel_j0(z),
        3 => sinc(z),
        _ => unreachable!("checked by caller"),
    };
    if dim > 3 {
        return Err(Error::Unsupported(format!(
            "Fourier inversion in dimension {dim}"
        )));
    }
    let mut f = |rho: f64| (kernel(rho * r) * g(rho) * rho.powi(di), 0.0);
    let tol = widened(&plan.tol, plan.panels(r) * (plan.breaks.len() + 1));
    let mut v = integrate_pair_breaks(&mut f, &plan.grid(), plan.panels(r), &tol)?;
    v.value *= c;
    v.error *= c;
    v.mass *= c;
    Ok(v)
}

fn widened(tol: &Tolerance, initial: usize) -> Tolerance {
    Tolerance {
        max_intervals: tol.max_intervals.max(4 * initial),
        ..*tol
    }
}

/// An orthonormal frame whose last vector points along `x` (or the last axis
/// when `x = 0`).
fn frame(x: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let r = norm2(x).sqrt();
    let mut axis = vec![0.0; d];
    if r > 0.0 {
        for (a, v) in axis.iter_mut().zip(x) {
            *a = v / r;
        }
    } else {
        axis[d - 1] = 1.0;
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    for e in 0..d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        let proj: f64 = v.iter().zip(&axis).map(|(a, b)| a * b).sum();
        for (vi, ai) in v.iter_mut().zip(&axis) {
            *vi -= proj * ai;
        }
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let n = norm2(&v).sqrt();
        if n > 1e-8 && basis.len() + 1 < d {
            v.iter_mut().for_each(|vi| *vi /= n);
            basis.push(v);
        }
    }
    basis.push(axis);
    basis
}

/// Directions `ω` with weights `w` such that `Σ w g(ω) ≈ ∫_{S^{d-1}} g dσ`,
/// together with `x·ω`.
fn angular_rule(x: &[f64], band: usize, extent: f64) -> Vec<(Vec<f64>, f64, f64)> {
    let d = x.len();
    let r = norm2(x).sqrt();
    match d {
        1 => vec![(vec![1.0], 1.0, x[0]), (vec![-1.0], 1.0, -x[0])],
        2 => {
            let n = ((extent * r).ceil() as usize + band + 24).next_multiple_of(2);
            let base = if r > 0.0 { x[1].atan2(x[0]) } else { 0.0 };
            (0..n)
                .map(|j| {
                    let psi = base + 2.0 * PI * j as f64 / n as f64;
                    let w = vec![psi.cos(), psi.sin()];
                    let xw = w[0] * x[0] + w[1] * x[1];
                    (w, 2.0 * PI / n as f64, xw)
                })
                .collect()
        }
        3 => {
            let f = frame(x);
            let nu = (0.75 * extent * r).ceil() as usize + band + 24;
            let npsi = (2 * band + 8).next_multiple_of(2);
            let rule = GaussRule::legendre(nu);
            let mut out = Vec::with_capacity(nu * npsi);
            for (&u, &wu) in rule.nodes().iter().zip(rule.weights()) {
                let s = (1.0 - u * u).max(0.0).sqrt();
                for j in 0..npsi {
                    let psi = 2.0 * PI * j as f64 / npsi as f64;
                    let (c1, c2) = (s * psi.cos(), s * psi.sin());
                    let w: Vec<f64> = (0..3)
                        .map(|i| c1 * f[0][i] + c2 * f[1][i] + u * f[2][i])
                        .collect();
                    out.push((w, wu * 2.0 * PI / npsi as f64, r * u));
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

fn general_inverse(
    dim: usize,
    x: &[f64],
    weight: RadialFn<'_>,
    hat: HatFn<'_>,
    band: usize,
    plan: &Plan,
) -> Result<Integral> {
    if dim > 3 {
        return Err(Error::Unsupported(format!(
            "Fourier inversion in dimension {dim}"
        )));
    }
    let dirs = angular_rule(x, band, plan.extent);
    let scale = (2.0 * PI).powi(-(dim as i32));
    let di = dim as i32 - 1;
    let mut theta = vec![0.0; dim];
    let mut f = |rho: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, wt, xw) in &dirs {
            for (t, wi) in theta.iter_mut().zip(w) {
                *t = rho * wi;
            }
            acc += *wt * Complex64::from_polar(1.0, rho * xw) * hat(&theta);
        }
        let v = acc * (weight(rho) * rho.powi(di));
        (v.re, v.im)
    };
    let r = norm2(x).sqrt();
    let mut tol = widened(&plan.tol, plan.panels(r) * (plan.breaks.len() + 1));
    // The angular sum can cancel exactly (odd integrands), which leaves the
    // quadrature without a scale; take it from the absolute integrand.
    let coarse = GaussRule::legendre(16);
    let mut theta_abs = vec![0.0; dim];
    let mut mass = 0.0;
    for g in plan.grid().windows(2) {
        mass += coarse.integrate(g[0], g[1], |rho| {
            let mut acc = 0.0;
            for (w, wt, _) in &dirs {
                for (t, wi) in theta_abs.iter_mut().zip(w) {
                    *t = rho * wi;
                }
                acc += wt * hat(&theta_abs).norm();
            }
            acc * weight(rho).abs() * rho.powi(di)
        });
    }
    tol.abs = tol.abs.max(tol.mass_rel * mass);
    let mut v = integrate_pair_breaks(&mut f, &plan.grid(), plan.panels(r), &tol)?;
    v.mass = v.mass.max(mass);
    v.value *= scale;
    v.imag *= scale;
    v.error *= scale;
    v.mass *= scale;
    Ok(v)
}
