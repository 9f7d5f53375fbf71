//! Small special-function helpers shared by the analytics and test functions.

use std::f64::consts::PI;

use crate::multi_index::MultiIndex;

pub use puruspe::{gamma, ln_gamma};

/// Bessel function of the first kind, orders 0 and 1.
#[inline]
pub fn bessel_j0(x: f64) -> f64 {
    puruspe::Jn(0, x)
}

#[inline]
pub fn bessel_j1(x: f64) -> f64 {
    puruspe::Jn(1, x)
}

/// `sin(x)/x`, stable near 0.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// `∫_{S^{d-1}} ω^k dσ(ω)`; zero when any component of `k` is odd.
pub fn sphere_monomial(k: &MultiIndex) -> f64 {
    if k.has_odd_component() {
        return 0.0;
    }
    let d = k.dim() as f64;
    let num: f64 = k
        .components()
        .iter()
        .map(|&ki| gamma((ki as f64 + 1.0) / 2.0))
        .product();
    2.0 * num / gamma((k.order() as f64 + d) / 2.0)
}

/// `∫_0^∞ ρ^{m} e^{-ρ^α} dρ = Γ((m+1)/α)/α`.
pub fn stable_radial_moment(m: f64, alpha: f64) -> f64 {
    gamma((m + 1.0) / alpha) / alpha
}
