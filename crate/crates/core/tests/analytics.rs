use std::f64::consts::PI;

use fvlab::analytics::{
    check_phi_integrability, density_derivative, gamma_d, kappa_d, semigroup_apply, theta_const,
    transition_density, VerdictKind,
};
use fvlab::moran::SamplingSchedule;
use fvlab::quadrature::GaussRule;
use fvlab::{MultiIndex, StableParams, TestFunction};
use proptest::prelude::*;

/// `(2π)^{-1} ∫ θ^{2m} e^{-|θ|^α} dθ` by brute-force Gauss-Legendre on a mesh
/// graded towards the cusp at 0.
fn theta_by_quadrature(alpha: f64, m: u32) -> f64 {
    let rule = GaussRule::legendre(64);
    let upper = 60f64.powf(1.0 / alpha);
    let mut breaks: Vec<f64> = (0..60).map(|j| upper * 0.7f64.powi(j)).collect();
    breaks.push(0.0);
    breaks.reverse();
    let s: f64 = breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |th| th.powi(2 * m as i32) * (-th.powf(alpha)).exp()))
        .sum();
    2.0 * s / (2.0 * PI)
}

#[test]
fn theta_constants_match_direct_integration() {
    for alpha in [0.6, 1.0, 1.5, 2.0] {
        let p = StableParams::new(alpha, 1).unwrap();
        for m in 0..=3 {
            let got = theta_const(&p, &MultiIndex::new(vec![2 * m]));
            let want = theta_by_quadrature(alpha, m);
            assert!((got - want).abs() <= 1e-10 * want, "alpha {alpha}, k {}: {got} vs {want}", 2 * m);
        }
    }
    let p = StableParams::new(2.0, 1).unwrap();
    let v = theta_const(&p, &MultiIndex::zero(1));
    assert!((v - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
}

#[test]
fn odd_components_give_zero_constants() {
    for d in 1..=3 {
        let p = StableParams::new(1.3, d).unwrap();
        for k in MultiIndex::up_to_order(d, 5) {
            if k.has_odd_component() {
                assert_eq!(theta_const(&p, &k), 0.0, "k = {k}");
            }
        }
    }
}

#[test]
fn density_derivative_at_origin_matches_theta() {
    for (alpha, d) in [(2.0, 1), (1.5, 1), (1.0, 1), (0.8, 1), (2.0, 2), (1.2, 2)] {
        let p = StableParams::new(alpha, d).unwrap();
        for k in MultiIndex::up_to_order(d, 4) {
            if k.order() % 2 == 1 || k.has_odd_component() {
                continue;
            }
            let sign = if (k.order() / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let want = sign * theta_const(&p, &k);
            let got = density_derivative(&p, 1.0, &vec![0.0; d], &k).unwrap();
            assert!(
                (got - want).abs() <= 1e-8 * want.abs().max(1e-3),
                "alpha {alpha}, d {d}, k {k}: {got} vs {want}"
            );
        }
    }
}

fn mass_within(p: &StableParams, t: f64, r: f64) -> f64 {
    let rule = GaussRule::legendre(32);
    let pieces = 40;
    let h = r / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            2.0 * rule.integrate(a, b, |x| transition_density(p, t, &[x]).unwrap())
        })
        .sum()
}

#[test]
fn density_is_conservative() {
    for t in [0.5f64, 1.0, 4.0] {
        // Cauchy with scale t, and the normal law with variance 2t.
        let cauchy = mass_within(&StableParams::new(1.0, 1).unwrap(), t, 10.0 * t);
        let exact = 2.0 / PI * 10f64.atan();
        assert!((cauchy - exact).abs() < 1e-8, "t {t}: {cauchy} vs {exact}");
        let normal = mass_within(&StableParams::new(2.0, 1).unwrap(), t, 10.0 * t.sqrt());
        assert!((normal - 1.0).abs() < 1e-9, "t {t}: {normal}");
        for alpha in [1.7, 1.8, 1.9] {
            let p = StableParams::new(alpha, 1).unwrap();
            let mass = mass_within(&p, t, 10.0 * t.powf(1.0 / alpha));
            assert!(mass >= 0.99 && mass <= 1.0 + 1e-8, "alpha {alpha}, t {t}: mass {mass}");
        }
    }
}

#[test]
fn gaussian_semigroup_matches_the_heat_kernel() {
    let p = StableParams::new(2.0, 1).unwrap();
    for w in [0.5, 1.0, 2.0] {
        let f = TestFunction::gaussian_bump(1, w).unwrap();
        let s2 = w * w / 2.0;
        for t in [0.1, 1.0, 5.0] {
            for x in [0.0, 0.7, 3.0] {
                let v = s2 + 2.0 * t;
                let want = (s2 / v).sqrt() * (-x * x / (2.0 * v)).exp();
                let got = semigroup_apply(&p, t, &f, &[x]).unwrap();
                assert!((got - want).abs() < 1e-9, "w {w}, t {t}, x {x}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn gamma_and_kappa_follow_the_regimes() {
    let low = StableParams::new(2.0, 1).unwrap();
    assert!((gamma_d(&low, 9.0).unwrap() - 3.0).abs() < 1e-14);
    // κ_1(2) = (2π)^{-1}·2·Γ(1/2)/2·2 = 1/√π
    assert!((kappa_d(&low).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-14);
    let crit = StableParams::new(1.0, 1).unwrap();
    assert!((gamma_d(&crit, 2f64.exp()).unwrap() - 2.0).abs() < 1e-14);
    assert_eq!(gamma_d(&crit, 0.5).unwrap(), 0.0);
    // κ_1(1) = (2π)^{-1}·2·Γ(1) = 1/π
    assert!((kappa_d(&crit).unwrap() - 1.0 / PI).abs() < 1e-14);
    let high = StableParams::new(1.0, 2).unwrap();
    assert_eq!(gamma_d(&high, 100.0).unwrap(), 1.0);
    assert!(kappa_d(&high).is_err());
}

#[test]
fn integrability_verdicts() {
    let exp = SamplingSchedule::exponential(1.0).unwrap();
    let flat = SamplingSchedule::constant(1.0).unwrap();
    let poly = SamplingSchedule::polynomial(2.0).unwrap();
    assert_eq!(check_phi_integrability(&exp, 3.0, 0.01).unwrap().kind, VerdictKind::Pass);
    assert_eq!(check_phi_integrability(&flat, -1.0, 0.0).unwrap().kind, VerdictKind::Fail);
    // ∫ ds / (1 + s²) < ∞, ∫ s ds / (1 + s²) = ∞
    assert_eq!(check_phi_integrability(&poly, -1.0, 0.0).unwrap().kind, VerdictKind::Pass);
    assert_eq!(check_phi_integrability(&poly, 0.0, 0.0).unwrap().kind, VerdictKind::Fail);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semigroup_law_holds_on_stable_kernels(
        alpha in 0.8f64..=2.0,
        u in 0.3f64..2.0,
        s in 0.1f64..2.0,
        t in 0.1f64..2.0,
        x in -3.0f64..3.0,
    ) {
        let p = StableParams::new(alpha, 1).unwrap();
        let f = TestFunction::stable_kernel(1, alpha, u).unwrap();
        let ts_f = TestFunction::stable_kernel(1, alpha, u + s).unwrap();
        let composed = semigroup_apply(&p, t, &ts_f, &[x]).unwrap();
        let direct = semigroup_apply(&p, t + s, &f, &[x]).unwrap();
        let density = transition_density(&p, u + s + t, &[x]).unwrap();
        prop_assert!((composed - direct).abs() <= 1e-9 * direct.abs() + 1e-12, "{} vs {}", composed, direct);
        prop_assert!((direct - density).abs() <= 1e-9 * density.abs() + 1e-12, "{} vs {}", direct, density);
    }

    #[test]
    fn semigroup_is_a_positive_contraction(
        alpha in 0.5f64..=2.0,
        t in 0.05f64..10.0,
        x in -4.0f64..4.0,
        r in 0.3f64..3.0,
    ) {
        let p = StableParams::new(alpha, 1).unwrap();
        let f = TestFunction::cosine_window(1, r).unwrap();
        let v = semigroup_apply(&p, t, &f, &[x]).unwrap();
        prop_assert!(v >= -1e-9 && v <= 1.0 + 1e-9, "{}", v);
    }
}
