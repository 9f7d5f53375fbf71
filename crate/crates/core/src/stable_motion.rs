//! Exact samplers for symmetric, isotropic α-stable motion.
//!
//! The characteristic exponent is `|θ|^α` with no factor ½: the increment over
//! a time `dt` has characteristic function `exp(-dt |θ|^α)`. At `α = 2` this is
//! a Gaussian with variance `2 dt` per coordinate, at `α = 1` a Cauchy law.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Values of α this close to 2 are treated as exactly Gaussian.
pub const GAUSSIAN_GUARD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    dim: usize,
}

impl StableParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::param("alpha", format!("{alpha} is outside (0, 2]")));
        }
        if dim == 0 {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        let alpha = if (2.0 - alpha) < GAUSSIAN_GUARD {
            2.0
        } else {
            alpha
        };
        Ok(Self { alpha, dim })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }

    /// Regime of the pair `(d, α)`: low (`d < α`), critical or high dimension.
    pub fn regime(&self) -> Regime {
        let d = self.dim as f64;
        if (d - self.alpha).abs() < 1e-12 {
            Regime::Critical
        } else if d < self.alpha {
            Regime::Low
        } else {
            Regime::High
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Low,
    Critical,
    High,
}

/// A sampled path: strictly increasing times starting at 0 and the positions
/// at those times, stored flat (`dim` coordinates per time).
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid {
    dim: usize,
    times: Vec<f64>,
    positions: Vec<f64>,
}

impl PathGrid {
    pub fn new(dim: usize, times: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        validate_grid(&times)?;
        if positions.len() != times.len() * dim {
            return Err(Error::InvalidGrid(format!(
                "{} positions for {} times in dimension {dim}",
                positions.len(),
                times.len()
            )));
        }
        Ok(Self {
            dim,
            times,
            positions,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.position(self.len() - 1)
    }
}

fn validate_grid(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::InvalidGrid("empty grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!("grid starts at {t0}, not 0")))
        }
        _ => {}
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(format!(
            "times not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// One draw with characteristic function `θ ↦ exp(-|θ|^α)`.
///
/// Chambers-Mallows-Stuck for the symmetric case; α = 1 reduces to `tan V`,
/// α = 2 is routed to a Gaussian with variance 2.
pub fn sample_stable_1d(alpha: f64, rng: &mut RngStream) -> Result<f64> {
    let params = StableParams::new(alpha, 1)?;
    Ok(stable_1d_unchecked(params.alpha(), rng))
}

#[inline]
pub(crate) fn stable_1d_unchecked(alpha: f64, rng: &mut RngStream) -> f64 {
    if alpha == 2.0 {
        return std::f64::consts::SQRT_2 * rng.normal();
    }
    let v = PI * (rng.uniform_open() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w = rng.exp1();
    let cos_v = v.cos();
    (alpha * v).sin() / cos_v.powf(1.0 / alpha)
        * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// One draw of a σ-stable subordinator at time `t`, with Laplace transform
/// `u ↦ exp(-t u^σ)`.
pub fn sample_subordinator(sigma: f64, t: f64, rng: &mut RngStream) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::param("sigma", format!("{sigma} is outside (0, 1)")));
    }
    if !(t > 0.0) {
        return Err(Error::param("t", format!("{t} must be positive")));
    }
    Ok(subordinator_unchecked(sigma, t, rng))
}

#[inline]
pub(crate) fn subordinator_unchecked(sigma: f64, t: f64, rng: &mut RngStream) -> f64 {
    let scale = t.powf(1.0 / sigma);
    if scale == 0.0 {
        return f64::MIN_POSITIVE;
    }
    // Kanter's one-sided representation of the unit positive stable law.
    loop {
        let u = PI * rng.uniform_open();
        let e = rng.exp1();
        let s = (sigma * u).sin() / u.sin().powf(1.0 / sigma)
            * (((1.0 - sigma) * u).sin() / e).powf((1.0 - sigma) / sigma);
        let s = scale * s;
        // Extreme angles can underflow or overflow; redraw.
        if s > 0.0 && s.is_finite() {
            return s;
        }
    }
}

/// Increment of the isotropic stable motion over `dt`, written into `out`
/// (length `params.dim()`).
pub fn sample_isotropic_increment_into(
    params: &StableParams,
    dt: f64,
    rng: &mut RngStream,
    out: &mut [f64],
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("{dt} must be positive")));
    }
    debug_assert_eq!(out.len(), params.dim());
    increment_unchecked(params, dt, rng, out);
    Ok(())
}

pub fn sample_isotropic_increment(
    params: &StableParams,
    dt: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; params.dim()];
    sample_isotropic_increment_into(params, dt, rng, &mut out)?;
    Ok(out)
}

/// Gaussian subordination: `G √(2S)` with `S` an (α/2)-subordinator at `dt`.
#[inline]
pub(crate) fn increment_unchecked(
    params: &StableParams,
    dt: f64,
    rng: &mut RngStream,
    out: &mut [f64],
) {
    let scale = if params.is_gaussian() {
        (2.0 * dt).sqrt()
    } else {
        (2.0 * subordinator_unchecked(params.alpha() / 2.0, dt, rng)).sqrt()
    };
    for x in out.iter_mut() {
        *x = scale * rng.normal();
    }
}

/// Simulates the motion on a grid of times, starting from `start` at time 0.
pub fn simulate_path(
    params: &StableParams,
    grid: &[f64],
    start: &[f64],
    rng: &mut RngStream,
) -> Result<PathGrid> {
    validate_grid(grid)?;
    let d = params.dim();
    if start.len() != d {
        return Err(Error::param(
            "start",
            format!("expected {d} coordinates, got {}", start.len()),
        ));
    }
    let mut positions = Vec::with_capacity(grid.len() * d);
    positions.extend_from_slice(start);
    let mut step = vec![0.0; d];
    for (k, w) in grid.windows(2).enumerate() {
        increment_unchecked(params, w[1] - w[0], rng, &mut step);
        for c in 0..d {
            let prev = positions[k * d + c];
            positions.push(prev + step[c]);
        }
    }
    PathGrid::new(d, grid.to_vec(), positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_reject_out_of_range() {
        assert!(StableParams::new(0.0, 1).is_err());
        assert!(StableParams::new(2.1, 1).is_err());
        assert!(StableParams::new(1.0, 0).is_err());
        assert!(StableParams::new(f64::NAN, 1).is_err());
    }

    #[test]
    fn alpha_near_two_is_gaussian() {
        let p = StableParams::new(2.0 - 1e-10, 1).unwrap();
        assert!(p.is_gaussian());
        assert!(!StableParams::new(1.999, 1).unwrap().is_gaussian());
    }

    #[test]
    fn regimes() {
        assert_eq!(StableParams::new(2.0, 1).unwrap().regime(), Regime::Low);
        assert_eq!(StableParams::new(1.0, 1).unwrap().regime(), Regime::Critical);
        assert_eq!(StableParams::new(2.0, 2).unwrap().regime(), Regime::Critical);
        assert_eq!(StableParams::new(1.0, 2).unwrap().regime(), Regime::High);
    }

    #[test]
    fn subordinator_rejects_bad_input() {
        let mut rng = RngStream::new(0, 0);
        assert!(sample_subordinator(1.0, 1.0, &mut rng).is_err());
        assert!(sample_subordinator(0.5, 0.0, &mut rng).is_err());
        assert!(sample_subordinator(0.5, -1.0, &mut rng).is_err());
    }

    #[test]
    fn subordinator_is_positive() {
        let mut rng = RngStream::new(3, 0);
        for &s in &[0.05, 0.3, 0.5, 0.9, 0.999] {
            for &t in &[1e-6, 1.0, 50.0] {
                for _ in 0..2000 {
                    assert!(sample_subordinator(s, t, &mut rng).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn increment_rejects_nonpositive_dt() {
        let p = StableParams::new(1.5, 2).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(sample_isotropic_increment(&p, 0.0, &mut rng).is_err());
    }

    #[test]
    fn single_point_grid_returns_start() {
        let p = StableParams::new(1.2, 3).unwrap();
        let mut rng = RngStream::new(0, 0);
        let path = simulate_path(&p, &[0.0], &[1.0, 2.0, 3.0], &mut rng).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path.last(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn path_rejects_bad_grids() {
        let p = StableParams::new(1.2, 1).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(simulate_path(&p, &[0.0, 1.0, 1.0], &[0.0], &mut rng).is_err());
        assert!(simulate_path(&p, &[0.5, 1.0], &[0.0], &mut rng).is_err());
        assert!(simulate_path(&p, &[], &[0.0], &mut rng).is_err());
    }

    #[test]
    fn identical_streams_give_identical_paths() {
        let p = StableParams::new(0.7, 2).unwrap();
        let grid: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let a = simulate_path(&p, &grid, &[0.0, 0.0], &mut RngStream::new(11, 2)).unwrap();
        let b = simulate_path(&p, &grid, &[0.0, 0.0], &mut RngStream::new(11, 2)).unwrap();
        assert_eq!(a, b);
    }
}
