use rayon::prelude::*;

use crate::analytics::{
    check_phi_integrability, expansion_error, gamma_d, kappa_d, semigroup_apply, semigroup_sup,
    theta_const,
};
use crate::error::{Error, Result};
use crate::moran::{run, InitialDistribution, TrackedValues};
use crate::multi_index::MultiIndex;
use crate::stable_motion::{Regime, StableParams};
use crate::test_function::{Shape, TestFunction};

use super::config::ExperimentConfig;
use super::report::{Check, Condition, Estimate, ScalingReport, Summary};

/// The experiment families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    MassScaling,
    OccupationScaling,
    MartingaleChecks,
    SemigroupExpansion,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MassScaling => "mass-scaling",
            ExperimentKind::OccupationScaling => "occupation-scaling",
            ExperimentKind::MartingaleChecks => "martingale-checks",
            ExperimentKind::SemigroupExpansion => "semigroup-expansion",
        }
    }
}

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ScalingReport> {
    match kind {
        ExperimentKind::MassScaling => run_mass_scaling(cfg),
        ExperimentKind::OccupationScaling => run_occupation_scaling(cfg),
        ExperimentKind::MartingaleChecks => run_martingale_checks(cfg),
        ExperimentKind::SemigroupExpansion => run_semigroup_expansion_study(cfg),
    }
}

/// Tracked values of every replica: `values[r][j][k]` is replica `r` at the
/// `j`-th snapshot (time 0 first, then the evaluation times) for function `k`.
struct Ensemble {
    particles: usize,
    times: Vec<f64>,
    names: Vec<String>,
    values: Vec<Vec<Vec<TrackedValues>>>,
    /// Initial positions per replica, when requested.
    initial: Vec<Vec<f64>>,
}

impl Ensemble {
    fn run(cfg: &ExperimentConfig, particles: usize, keep_initial: bool) -> Result<Self> {
        let times = cfg.evaluation_times()?;
        let names: Vec<String> = cfg.functions()?.iter().map(TestFunction::name).collect();
        let replicas = cfg.experiment.replicas;
        let results: Vec<(Vec<Vec<TrackedValues>>, Vec<f64>)> = (0..replicas as u64)
            .into_par_iter()
            .map(|r| {
                let mut rc = cfg.run_config(particles, r)?;
                rc.keep_events = false;
                rc.record_paths = false;
                let out = run(&rc)?;
                if out.snapshots.len() != times.len() + 1 {
                    return Err(Error::Numerical(format!(
                        "replica {r} produced {} snapshots for {} evaluation times",
                        out.snapshots.len(),
                        times.len()
                    )));
                }
                let initial = if keep_initial {
                    out.snapshots[0].state.positions().to_vec()
                } else {
                    Vec::new()
                };
                Ok((out.snapshots.into_iter().map(|s| s.values).collect(), initial))
            })
            .collect::<Result<Vec<_>>>()?;
        let (values, initial) = results.into_iter().unzip();
        Ok(Self {
            particles,
            times,
            names,
            values,
            initial,
        })
    }

    /// `g` over replicas at snapshot `j` for function `k`.
    fn column(&self, j: usize, k: usize, g: impl Fn(&TrackedValues) -> f64) -> Vec<f64> {
        self.values.iter().map(|rep| g(&rep[j][k])).collect()
    }
}

fn settings(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn new_report(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let id = cfg
        .experiment
        .id
        .clone()
        .unwrap_or_else(|| kind.name().to_string());
    Ok(ScalingReport::new(&id, kind.name(), cfg.label(), settings(cfg)?))
}

fn reject_non_integrable(fs: &[TestFunction], experiment: &str) -> Result<()> {
    if let Some(f) = fs.iter().find(|f| matches!(f.shape(), Shape::Constant { .. })) {
        return Err(Error::Config(format!(
            "{} is not integrable; {experiment} needs functions in L1",
            f.name()
        )));
    }
    Ok(())
}

fn condition(
    cfg: &ExperimentConfig,
    name: &str,
    description: &str,
    exponent: f64,
    eps: f64,
) -> Result<Condition> {
    let verdict = check_phi_integrability(&cfg.sampling_schedule()?, exponent, eps)?;
    Ok(Condition {
        name: name.into(),
        description: description.into(),
        exponent,
        eps,
        verdict,
    })
}

/// Requires the condition; a failure downgrades the report.
fn require(report: &mut ScalingReport, c: Condition) {
    if !c.verdict.passed() {
        report.exploratory = true;
        report.notices.push(format!(
            "{} ({}): {}; results are exploratory",
            c.name, c.verdict.kind, c.verdict.reason
        ));
    }
    report.conditions.push(c);
}

/// Smallest drop of `|x|` between consecutive entries.
fn min_decrease(xs: &[f64]) -> f64 {
    xs.windows(2)
        .map(|w| w[0].abs() - w[1].abs())
        .fold(f64::INFINITY, f64::min)
}

fn mass_target(params: &StableParams, f: &TestFunction, order: u32, t: f64) -> Result<f64> {
    let a = params.alpha();
    let mut target = 0.0;
    for k in MultiIndex::up_to_order(params.dim(), order) {
        if k.order() % 2 == 1 {
            continue;
        }
        let theta = theta_const(params, &k);
        if theta == 0.0 {
            continue;
        }
        let sign = if (k.order() / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let lambda = f.moment(&k)? / k.factorial();
        target += sign * t.powf(-(k.order() as f64) / a) * theta * lambda;
    }
    Ok(target)
}

/// `t^{d/α} X_t(f)` against `Σ_{|k| ≤ N, even} (-1)^{|k|/2} t^{-|k|/α} ϑ^k λ^k(f)`
/// with `λ^k(f) = ∫ f(y) y^k dy / k!`.
pub fn run_mass_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let kind = ExperimentKind::MassScaling;
    let params = cfg.params()?;
    let fs = cfg.functions()?;
    reject_non_integrable(&fs, "mass scaling")?;
    let e = &cfg.experiment;
    let d = params.dim() as f64;
    let a = params.alpha();
    let mut report = new_report(kind, cfg)?;
    let p = (2.0 * e.order as f64 + d) / a;
    require(
        &mut report,
        condition(
            cfg,
            "phi integrability condition for mass scaling",
            "integral of s^(p+1+eps0)/phi(s) over [1, inf) is finite, p = (2N+d)/alpha",
            p,
            e.eps0,
        )?,
    );

    let mut sizes = vec![cfg.system.particles];
    if e.n_doubling {
        sizes.push(2 * cfg.system.particles);
    }
    for (si, &n) in sizes.iter().enumerate() {
        let ens = Ensemble::run(cfg, n, false)?;
        for (k, f) in fs.iter().enumerate() {
            let name = &ens.names[k];
            let mut means = Vec::new();
            let mut targets = Vec::new();
            let mut last = None;
            for (j, &t) in ens.times.iter().enumerate() {
                let scale = t.powf(d / a);
                let s = Summary::of(&ens.column(j + 1, k, |v| scale * v.x));
                let target = mass_target(&params, f, e.order, t)?;
                report
                    .estimates
                    .push(Estimate::new("mass", name, n, t, &s, Some(target)));
                means.push(s.mean);
                targets.push(target);
                last = Some((t, s, target));
            }
            if si > 0 {
                continue;
            }
            let (t, s, target) = last.expect("at least one time");
            if target == 0.0 {
                report.checks.push(Check::two_sided(
                    "mass final",
                    name,
                    Some(t),
                    &s,
                    0.0,
                    e.z_threshold,
                    0.0,
                ));
                continue;
            }
            report.checks.push(Check::two_sided(
                "mass final",
                name,
                Some(t),
                &s,
                target,
                0.0,
                e.tolerance,
            ));
            if means.len() >= 2 {
                // The order-N target depends on t only through vanishing
                // corrections; the gap is measured to the time's own target.
                let gaps: Vec<f64> = means.iter().zip(&targets).map(|(m, g)| m - g).collect();
                report.checks.push(Check::trend(
                    "mass trend",
                    name,
                    e.replicas,
                    min_decrease(&gaps),
                    "distance of the ensemble mean to the target strictly decreases from each time to the next",
                ));
            }
        }
    }
    Ok(report)
}

/// `Y_t(f)/γ_d(t)` and `Z_t(f)/γ_d(t)` against `κ_d(α) λ(f)` for `d ≤ α`;
/// increments of `Y`, `Z` and `M` for `d > α`.
pub fn run_occupation_scaling(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let kind = ExperimentKind::OccupationScaling;
    let params = cfg.params()?;
    let fs = cfg.functions()?;
    reject_non_integrable(&fs, "occupation scaling")?;
    let e = &cfg.experiment;
    let mut report = new_report(kind, cfg)?;
    require(
        &mut report,
        condition(
            cfg,
            "inverse sampling rate integrable",
            "integral of 1/phi(s) over [1, inf) is finite",
            -1.0,
            0.0,
        )?,
    );
    let times = cfg.evaluation_times()?;
    let high = params.regime() == Regime::High;
    let gammas = times
        .iter()
        .map(|&t| gamma_d(&params, t))
        .collect::<Result<Vec<_>>>()?;
    if !high {
        if let Some((t, _)) = times.iter().zip(&gammas).find(|(_, g)| !(**g > 0.0)) {
            return Err(Error::Config(format!(
                "gamma_d vanishes at t = {t}; critical dimension needs times above 1"
            )));
        }
    } else {
        report.notices.push(format!(
            "kappa is undefined for d = {} > alpha = {}; reporting convergence of Y, Z and M instead",
            params.dim(),
            params.alpha()
        ));
    }

    let mut sizes = vec![cfg.system.particles];
    if e.n_doubling {
        sizes.push(2 * cfg.system.particles);
    }
    for (si, &n) in sizes.iter().enumerate() {
        let ens = Ensemble::run(cfg, n, false)?;
        for (k, f) in fs.iter().enumerate() {
            let name = &ens.names[k];
            if high {
                high_dimension(&mut report, &ens, k, name, si == 0);
                continue;
            }
            let target = kappa_d(&params)? * f.lebesgue_integral()?;
            let mut ys = Vec::new();
            let mut zs = Vec::new();
            for (j, &t) in times.iter().enumerate() {
                let g = gammas[j];
                let y = Summary::of(&ens.column(j + 1, k, |v| v.y / g));
                let z = Summary::of(&ens.column(j + 1, k, |v| v.z / g));
                let m = Summary::of(&ens.column(j + 1, k, |v| v.m / g));
                report
                    .estimates
                    .push(Estimate::new("occupation", name, n, t, &y, Some(target)));
                report
                    .estimates
                    .push(Estimate::new("inhabitation", name, n, t, &z, Some(target)));
                report
                    .estimates
                    .push(Estimate::new("corrector", name, n, t, &m, Some(0.0)));
                if si == 0 {
                    let joint = (y.se * y.se + z.se * z.se).sqrt();
                    let mut c = Check::two_sided(
                        "occupation-inhabitation agreement",
                        name,
                        Some(t),
                        &Summary {
                            n: y.n,
                            mean: z.mean - y.mean,
                            sd: f64::NAN,
                            se: joint,
                        },
                        0.0,
                        e.agreement_threshold,
                        0.0,
                    );
                    c.rule = format!(
                        "|mean Z/gamma - mean Y/gamma| <= {} sqrt(se_Y^2 + se_Z^2)",
                        e.agreement_threshold
                    );
                    report.checks.push(c);
                }
                ys.push((t, y));
                zs.push((t, z));
            }
            if si > 0 {
                continue;
            }
            for (label, series) in [("occupation", &ys), ("inhabitation", &zs)] {
                let (t, s) = *series.last().expect("at least one time");
                report.checks.push(Check::two_sided(
                    &format!("{label} final"),
                    name,
                    Some(t),
                    &s,
                    target,
                    0.0,
                    e.tolerance,
                ));
                if series.len() >= 2 {
                    let first = (series[0].1.mean - target).abs();
                    let last = (s.mean - target).abs();
                    report.checks.push(Check::trend(
                        &format!("{label} approach"),
                        name,
                        e.replicas,
                        first - last,
                        "distance to the target at the last time is below the distance at the first",
                    ));
                }
            }
        }
    }
    Ok(report)
}

fn high_dimension(report: &mut ScalingReport, ens: &Ensemble, k: usize, name: &str, check: bool) {
    let n = ens.particles;
    let r = ens.values.len();
    for (j, &t) in ens.times.iter().enumerate() {
        for (q, g) in [
            ("occupation", (|v: &TrackedValues| v.y) as fn(&TrackedValues) -> f64),
            ("inhabitation", |v| v.z),
            ("corrector", |v| v.m),
        ] {
            let s = Summary::of(&ens.column(j + 1, k, g));
            report.estimates.push(Estimate::new(q, name, n, t, &s, None));
        }
    }
    let mut y_incr = Vec::new();
    for j in 1..ens.times.len() {
        let t = ens.times[j];
        for (q, g) in [
            ("occupation_increment", (|v: &TrackedValues| v.y) as fn(&TrackedValues) -> f64),
            ("inhabitation_increment", |v| v.z),
            ("corrector_increment", |v| v.m),
        ] {
            let a = ens.column(j, k, g);
            let b = ens.column(j + 1, k, g);
            let incr: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (y - x).abs()).collect();
            let s = Summary::of(&incr);
            report.estimates.push(Estimate::new(q, name, n, t, &s, None));
            if q == "occupation_increment" {
                y_incr.push(s);
            }
        }
    }
    if !check {
        return;
    }
    if y_incr.len() >= 2 {
        let means: Vec<f64> = y_incr.iter().map(|s| s.mean).collect();
        report.checks.push(Check::trend(
            "occupation increments decreasing",
            name,
            r,
            min_decrease(&means),
            "ensemble mean of |Y(t_{n+1}) - Y(t_n)| strictly decreases across lattice steps",
        ));
    }
    let mut identity = 0.0f64;
    for rep in &ens.values {
        for snap in rep {
            let v = &snap[k];
            identity = identity.max((v.z - (v.m + v.y)).abs());
        }
    }
    report.checks.push(Check::at_most(
        "inhabitation identity",
        name,
        None,
        r,
        identity,
        0.0,
        1e-12,
        "max over replicas and times of |Z - (M + Y)| <= 1e-12",
    ));
}

/// Atoms and weights of `μ` when it is purely atomic.
fn atoms(mu: &InitialDistribution) -> Option<Vec<Vec<f64>>> {
    match mu {
        InitialDistribution::Point { at } => Some(vec![at.clone()]),
        InitialDistribution::Empirical { atoms } => Some(atoms.clone()),
        _ => None,
    }
}

/// Mean evolution `E X_t(f) = μ(T_t f)`, quadratic-variation matching, the
/// second-moment bound, nullity and increment orthogonality of the
/// corrector, and variance diagnostics.
pub fn run_martingale_checks(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let kind = ExperimentKind::MartingaleChecks;
    let params = cfg.params()?;
    let schedule = cfg.sampling_schedule()?;
    let fs = cfg.functions()?;
    let e = &cfg.experiment;
    let mut report = new_report(kind, cfg)?;
    let mu = cfg.initial()?;
    let atoms = atoms(&mu);
    if atoms.is_none() {
        report.notices.push(
            "second-moment bound skipped: it needs an atomic initial law to evaluate X_0(T_t f)"
                .into(),
        );
    }
    let d = params.dim() as f64;
    let a = params.alpha();
    let (p, eps) = match params.regime() {
        Regime::Low => (1.0 - 2.0 * d / a, 0.0),
        Regime::Critical => (-1.0, e.eps0),
        Regime::High => (-1.0, 0.0),
    };
    let l2 = condition(
        cfg,
        "square-integrable corrector",
        "integral of gamma_d(s)^2/phi(s) over [1, inf) is finite",
        p,
        eps,
    )?;
    if !l2.verdict.passed() {
        report.notices.push(format!(
            "{} ({}): variance of M is not expected to stay bounded",
            l2.name, l2.verdict.kind
        ));
    }
    let stabilizes = l2.verdict.passed();
    report.conditions.push(l2);

    let n = cfg.system.particles;
    let ens = Ensemble::run(cfg, n, atoms.is_some())?;
    let times = ens.times.clone();
    let r = e.replicas;
    let eta = cfg.system.eta;
    for (k, f) in fs.iter().enumerate() {
        let name = &ens.names[k];
        let mut prev_m = vec![0.0; r];
        let mut prev_incr: Option<Vec<f64>> = None;
        let f2 = f.squared()?;
        for (j, &t) in times.iter().enumerate() {
            let m = ens.column(j + 1, k, |v| v.m);
            let sm = Summary::of(&m);
            report
                .estimates
                .push(Estimate::new("martingale", name, n, t, &sm, Some(0.0)));
            report.checks.push(Check::two_sided(
                "martingale nullity",
                name,
                Some(t),
                &sm,
                0.0,
                e.z_threshold,
                0.0,
            ));

            let sx = Summary::of(&ens.column(j + 1, k, |v| v.x));
            let mean_target = mu.integrate_semigroup(&params, t, f)?;
            report
                .estimates
                .push(Estimate::new("mean", name, n, t, &sx, Some(mean_target)));
            report.checks.push(Check::two_sided(
                "mean evolution",
                name,
                Some(t),
                &sx,
                mean_target,
                e.z_threshold,
                0.0,
            ));

            let gap = Summary::of(&ens.column(j + 1, k, |v| v.qv_jump - v.qv_compensator));
            report
                .estimates
                .push(Estimate::new("qv_gap", name, n, t, &gap, Some(0.0)));
            report.checks.push(Check::two_sided(
                "quadratic variation",
                name,
                Some(t),
                &gap,
                0.0,
                e.qv_threshold,
                0.0,
            ));
            for (q, g) in [
                ("qv_jump", (|v: &TrackedValues| v.qv_jump) as fn(&TrackedValues) -> f64),
                ("qv_compensator", |v| v.qv_compensator),
                ("qv_motion", |v| v.qv_motion),
            ] {
                let s = Summary::of(&ens.column(j + 1, k, g));
                report.estimates.push(Estimate::new(q, name, n, t, &s, None));
            }

            let var = variance_summary(&m);
            report
                .estimates
                .push(Estimate::new("corrector_variance", name, n, t, &var, None));
            let incr: Vec<f64> = m.iter().zip(&prev_m).map(|(x, y)| x - y).collect();
            let sq: Vec<f64> = incr.iter().map(|x| x * x).collect();
            let dsq = Summary::of(&sq);
            report.estimates.push(Estimate::new(
                "corrector_variance_increment",
                name,
                n,
                t,
                &dsq,
                None,
            ));
            if stabilizes && j > 0 && j + 1 == times.len() {
                let mut c = Check::two_sided(
                    "corrector variance stabilization",
                    name,
                    Some(t),
                    &dsq,
                    0.0,
                    e.z_threshold,
                    0.0,
                );
                c.rule = format!(
                    "mean (M_t - M_s)^2 over the last two times within {} stderr of 0",
                    e.z_threshold
                );
                report.checks.push(c);
            }
            if let Some(prev) = &prev_incr {
                let (stat, se, rho) = fisher_z(prev, &incr);
                let s = Summary {
                    n: r,
                    mean: stat,
                    sd: f64::NAN,
                    se,
                };
                report.estimates.push(Estimate::new(
                    "increment_correlation",
                    name,
                    n,
                    t,
                    &Summary {
                        n: r,
                        mean: rho,
                        sd: f64::NAN,
                        se: se * (1.0 - rho * rho),
                    },
                    Some(0.0),
                ));
                let mut c = Check::two_sided(
                    "increment orthogonality",
                    name,
                    Some(t),
                    &s,
                    0.0,
                    e.z_threshold,
                    0.0,
                );
                c.rule = format!(
                    "|atanh(r)| <= {} / sqrt(R - 3), r the correlation of consecutive increments of M",
                    e.z_threshold
                );
                report.checks.push(c);
            }
            prev_incr = Some(incr);
            prev_m = m;

            if let Some(atoms) = &atoms {
                let tf = atoms
                    .iter()
                    .map(|x| semigroup_apply(&params, t, f, x))
                    .collect::<Result<Vec<_>>>()?;
                let sq: Vec<f64> = (0..r)
                    .map(|rep| {
                        let x0 = initial_average(&ens.initial[rep], atoms, &tf, params.dim());
                        (ens.values[rep][j + 1][k].x - x0).powi(2)
                    })
                    .collect();
                let s = Summary::of(&sq);
                let bound = semigroup_sup(&params, t, &f2)?
                    * (eta * schedule.inverse_rate_integral(0.0, t)? + 1.0 / n as f64);
                report
                    .estimates
                    .push(Estimate::new("second_moment", name, n, t, &s, Some(bound)));
                let mut c = Check::upper("second-moment bound", name, Some(t), &s, bound, e.z_threshold);
                c.rule = format!(
                    "mean (X_t f - X_0 T_t f)^2 <= sup T_t(f^2) (eta int_0^t ds/phi + 1/N) + {} stderr",
                    e.z_threshold
                );
                report.checks.push(c);
            }
        }
    }
    Ok(report)
}

/// `X_0(T_t f)` for particles sitting on atoms.
fn initial_average(positions: &[f64], atoms: &[Vec<f64>], tf: &[f64], d: usize) -> f64 {
    let n = positions.len() / d;
    let mut s = 0.0;
    for x in positions.chunks_exact(d) {
        let a = atoms.iter().position(|a| a.as_slice() == x).unwrap_or(0);
        s += tf[a];
    }
    s / n as f64
}

/// Sample variance with the delta-method standard error
/// `sqrt((m4 - s^4) / R)`.
fn variance_summary(xs: &[f64]) -> Summary {
    let s = Summary::of(xs);
    let n = xs.len() as f64;
    let var = s.sd * s.sd;
    let m4 = xs.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / n;
    Summary {
        n: xs.len(),
        mean: var,
        sd: f64::NAN,
        se: ((m4 - var * var).max(0.0) / n).sqrt(),
    }
}

/// `(atanh r, 1/sqrt(R-3), r)` for the sample correlation `r`; zero when
/// either sample is constant.
fn fisher_z(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let sa = Summary::of(a);
    let sb = Summary::of(b);
    let se = 1.0 / ((a.len() as f64 - 3.0).max(1.0)).sqrt();
    if !(sa.sd > 0.0 && sb.sd > 0.0) {
        return (0.0, se, 0.0);
    }
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - sa.mean) * (y - sb.mean))
        .sum::<f64>()
        / (a.len() as f64 - 1.0);
    let rho = (cov / (sa.sd * sb.sd)).clamp(-1.0, 1.0);
    (rho.atanh(), se, rho)
}

/// `t^{(N+d)/α} sup |T_t f - L_t f|` over the configured orders and times.
pub fn run_semigroup_expansion_study(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let kind = ExperimentKind::SemigroupExpansion;
    let params = cfg.params()?;
    let fs = cfg.functions()?;
    reject_non_integrable(&fs, "the expansion study")?;
    let e = &cfg.experiment;
    let times = &e.expansion_times;
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(Error::Config(
            "expansion_times must be positive and increasing".into(),
        ));
    }
    if e.expansion_orders.is_empty() {
        return Err(Error::Config("no expansion orders given".into()));
    }
    let mut report = new_report(kind, cfg)?;
    for f in &fs {
        let name = f.name();
        for &order in &e.expansion_orders {
            let quantity = format!("expansion_error_order{order}");
            let errs = times
                .iter()
                .map(|&t| expansion_error(&params, t, f, order))
                .collect::<Result<Vec<_>>>()?;
            for (&t, &v) in times.iter().zip(&errs) {
                report
                    .estimates
                    .push(Estimate::deterministic(&quantity, &name, t, v));
            }
            if errs.len() >= 3 {
                let rel: Vec<f64> = errs[1..].iter().map(|v| v / errs[1]).collect();
                let c = Check::trend(
                    &format!("expansion tail decreasing (order {order})"),
                    &name,
                    0,
                    min_decrease(&rel),
                    "scaled error strictly decreases from the second time on; statistic is the smallest drop relative to the second time",
                );
                if !c.passed {
                    report
                        .notices
                        .push(format!("{name}, order {order}: non-decreasing tail"));
                }
                report.checks.push(c);
            }
        }
    }
    Ok(report)
}
