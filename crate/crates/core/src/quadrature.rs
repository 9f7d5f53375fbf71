//! Gauss-Legendre rules and a globally adaptive integrator.
//!
//! The adaptive scheme estimates the error on each interval by comparing an
//! n-point Gauss-Legendre value on the whole interval with the sum over its two
//! halves, and always splits the interval with the largest estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// n-point Gauss-Legendre rule on `[-1, 1]`, nodes by Newton iteration on
    /// the Legendre recurrence.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const PANEL_POINTS: usize = 15;

fn panel_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(PANEL_POINTS))
}

/// Stopping rule for [`integrate_pair`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative to the magnitude of the integral.
    pub rel: f64,
    /// Relative to the integral of the absolute integrand; guards integrals
    /// that cancel to (nearly) zero.
    pub mass_rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-11,
            mass_rel: 1e-13,
            abs: 1e-300,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn with_rel(rel: f64) -> Self {
        Self {
            rel,
            mass_rel: rel * 1e-2,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub imag: f64,
    pub error: f64,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    a: f64,
    b: f64,
    re: f64,
    im: f64,
    err: f64,
    mass: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn rule_pair(f: &mut impl FnMut(f64) -> (f64, f64), a: f64, b: f64) -> (f64, f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    let mut mass = 0.0;
    for (x, w) in panel_rule().mapped(a, b) {
        let (u, v) = f(x);
        re += w * u;
        im += w * v;
        mass += w * u.abs().max(v.abs());
    }
    (re, im, mass)
}

fn evaluate_piece(f: &mut impl FnMut(f64) -> (f64, f64), a: f64, b: f64) -> Piece {
    let m = 0.5 * (a + b);
    let (r0, i0, _) = rule_pair(f, a, b);
    let (r1, i1, m1) = rule_pair(f, a, m);
    let (r2, i2, m2) = rule_pair(f, m, b);
    let re = r1 + r2;
    let im = i1 + i2;
    let err = (re - r0).abs().max((im - i0).abs());
    Piece {
        a,
        b,
        re,
        im,
        err,
        mass: m1 + m2,
    }
}

/// Adaptive integral of a complex-valued integrand given as `(re, im)` pairs
/// over `[a, b]`, starting from `panels` equal pieces.
pub fn integrate_pair(
    mut f: impl FnMut(f64) -> (f64, f64),
    a: f64,
    b: f64,
    panels: usize,
    tol: &Tolerance,
) -> Result<Integral> {
    integrate_pair_breaks(&mut f, &[a, b], panels, tol)
}

/// As [`integrate_pair`] with user-supplied breakpoints; each gap between
/// consecutive breakpoints is further divided into `panels` pieces.
pub fn integrate_pair_breaks(
    f: &mut impl FnMut(f64) -> (f64, f64),
    breaks: &[f64],
    panels: usize,
    tol: &Tolerance,
) -> Result<Integral> {
    if breaks.len() < 2 {
        return Ok(Integral::default());
    }
    let panels = panels.max(1);
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            heap.push(evaluate_piece(f, lo, hi));
        }
    }
    let mut count = heap.len();
    let mut totals = heap.iter().fold(Totals::default(), |t, p| t.add(p));
    loop {
        let target = (tol.rel * totals.re.abs().max(totals.im.abs()))
            .max(tol.mass_rel * totals.mass)
            .max(tol.abs);
        let done = totals.err <= target || !totals.err.is_finite();
        if done || count >= tol.max_intervals {
            // Running sums drift; recompute exactly before reporting.
            let exact = heap.iter().fold(Totals::default(), |t, p| t.add(p));
            if !exact.re.is_finite() || !exact.im.is_finite() {
                return Err(Error::Numerical("non-finite integrand".into()));
            }
            if !done && exact.err > 1e4 * target {
                return Err(Error::Numerical(format!(
                    "quadrature did not converge: error {:e} against target {target:e}",
                    exact.err
                )));
            }
            if done || exact.err <= target || count >= tol.max_intervals {
                return Ok(Integral {
                    value: exact.re,
                    imag: exact.im,
                    error: exact.err,
                    mass: exact.mass,
                });
            }
        }
        let worst = heap.pop().expect("non-empty heap");
        totals = totals.sub(&worst);
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            // Interval cannot be split further in floating point.
            let frozen = Piece { err: 0.0, ..worst };
            totals = totals.add(&frozen);
            heap.push(frozen);
            continue;
        }
        for piece in [evaluate_piece(f, worst.a, m), evaluate_piece(f, m, worst.b)] {
            totals = totals.add(&piece);
            heap.push(piece);
        }
        count += 1;
    }
}

#[derive(Clone, Copy, Default)]
struct Totals {
    re: f64,
    im: f64,
    err: f64,
    mass: f64,
}

impl Totals {
    fn add(self, p: &Piece) -> Self {
        Self {
            re: self.re + p.re,
            im: self.im + p.im,
            err: self.err + p.err,
            mass: self.mass + p.mass,
        }
    }

    fn sub(self, p: &Piece) -> Self {
        Self {
            re: self.re - p.re,
            im: self.im - p.im,
            err: (self.err - p.err).max(0.0),
            mass: self.mass - p.mass,
        }
    }
}

/// Real-valued convenience wrapper around [`integrate_pair`].
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    tol: &Tolerance,
) -> Result<Integral> {
    integrate_pair(|x| (f(x), 0.0), a, b, panels, tol)
}
