//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use fvlab::analytics::{check_phi_integrability, kappa_d, theta_const, transition_density};
use fvlab::lab::{
    run_martingale_checks, run_mass_scaling, run_occupation_scaling,
    run_semigroup_expansion_study, summarize, ExperimentConfig, ScalingReport,
};
use fvlab::moran::{run, InitialDistribution, ParticleState, SamplingSchedule, ScheduleKind};
use fvlab::special::gamma;
use fvlab::stable_motion::sample_isotropic_increment_into;
use fvlab::{MultiIndex, RngStream, StableParams};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn p(alpha: f64, d: usize) -> StableParams {
    StableParams::new(alpha, d).unwrap()
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(text).expect("valid config")
}

/// Passes when every check with one of the given names passed; lists the
/// failures otherwise.
fn checks(report: &ScalingReport, names: &[&str]) -> Outcome {
    let selected: Vec<_> = report
        .checks
        .iter()
        .filter(|c| names.contains(&c.name.as_str()))
        .collect();
    if selected.is_empty() {
        return Err(format!("no checks named {names:?}"));
    }
    let failed: Vec<String> = selected
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "{} [{}] t={:?}: statistic {:.5} stderr {:.2e} target {:.5}",
                c.name, c.function, c.t, c.statistic, c.stderr, c.target
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(format!("{} checks", selected.len()))
    } else {
        Err(failed.join("; "))
    }
}

fn series(report: &ScalingReport, quantity: &str) -> String {
    report
        .estimates_of(quantity)
        .map(|e| format!("{}:{:.4e}±{:.1e}", e.t, e.mean, e.stderr))
        .collect::<Vec<_>>()
        .join(" ")
}

fn kernel_oracles() -> Outcome {
    let mut rng = RngStream::new(1001, 0);
    let mut worst = 0.0f64;
    for d in 1..=3usize {
        for alpha in [2.0, 1.0] {
            let params = p(alpha, d);
            for _ in 0..100 {
                let t = (rng.uniform() * (10f64).ln() * 2.0 - (10f64).ln()).exp();
                let scale = t.powf(1.0 / alpha);
                let x: Vec<f64> = (0..d).map(|_| scale * (2.0 * rng.uniform() - 1.0) * 2.0).collect();
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let df = d as f64;
                let exact = if alpha == 2.0 {
                    (4.0 * PI * t).powf(-df / 2.0) * (-r2 / (4.0 * t)).exp()
                } else {
                    gamma((df + 1.0) / 2.0) / PI.powf((df + 1.0) / 2.0) * t
                        / (t * t + r2).powf((df + 1.0) / 2.0)
                };
                let got = transition_density(&params, t, &x).map_err(|e| e.to_string())?;
                let rel = (got - exact).abs() / exact;
                worst = worst.max(rel);
                if rel > 1e-6 {
                    return Err(format!("alpha={alpha} d={d} t={t} x={x:?}: {got} vs {exact}"));
                }
            }
        }
    }
    Ok(format!("600 points, worst relative error {worst:.2e}"))
}

fn constant_oracles() -> Outcome {
    let g = p(2.0, 1);
    let t0 = theta_const(&g, &MultiIndex::new(vec![0]));
    let t2 = theta_const(&g, &MultiIndex::new(vec![2]));
    let k = kappa_d(&g).map_err(|e| e.to_string())?;
    let pairs = [
        ("theta0", t0, (4.0 * PI).powf(-0.5)),
        ("theta2", t2, 1.0 / (4.0 * PI.sqrt())),
        ("kappa", k, PI.powf(-0.5)),
    ];
    for (name, got, exact) in pairs {
        if (got - exact).abs() > 1e-6 {
            return Err(format!("{name}: {got} vs {exact}"));
        }
    }
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        for d in 1..=3usize {
            for k in MultiIndex::up_to_order(d, 5) {
                if k.has_odd_component() && theta_const(&p(alpha, d), &k) != 0.0 {
                    return Err(format!("theta^{k} nonzero for alpha={alpha} d={d}"));
                }
            }
        }
    }
    Ok(format!("theta0={t0:.9} theta2={t2:.9} kappa={k:.9}; odd components exactly 0"))
}

fn sampler_calibration() -> Outcome {
    let m = 1_000_000usize;
    let bound = 4.0 / (m as f64).sqrt();
    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        for d in [1usize, 2] {
            let params = p(alpha, d);
            let thetas: Vec<Vec<f64>> = if d == 1 {
                vec![vec![0.25], vec![0.5], vec![1.0], vec![1.5], vec![2.0]]
            } else {
                vec![
                    vec![0.5, 0.0],
                    vec![0.0, 1.0],
                    vec![0.6, 0.8],
                    vec![1.0, 1.0],
                    vec![-1.2, 0.5],
                ]
            };
            let mut rng = RngStream::new(2002, (alpha * 10.0) as u64 * 10 + d as u64);
            let mut x = vec![0.0; d];
            let mut re = vec![0.0; thetas.len()];
            let mut im = vec![0.0; thetas.len()];
            for _ in 0..m {
                sample_isotropic_increment_into(&params, 1.0, &mut rng, &mut x)
                    .map_err(|e| e.to_string())?;
                for (j, th) in thetas.iter().enumerate() {
                    let phase: f64 = th.iter().zip(&x).map(|(a, b)| a * b).sum();
                    re[j] += phase.cos();
                    im[j] += phase.sin();
                }
            }
            for (j, th) in thetas.iter().enumerate() {
                let norm = th.iter().map(|v| v * v).sum::<f64>().sqrt();
                let exact = (-norm.powf(alpha)).exp();
                let dev = (re[j] / m as f64 - exact).abs().max((im[j] / m as f64).abs());
                worst = worst.max(dev);
                if dev > bound {
                    return Err(format!(
                        "alpha={alpha} d={d} theta={th:?}: deviation {dev:.2e} > {bound:.2e}"
                    ));
                }
            }
        }
    }
    Ok(format!("8 laws x 5 frequencies, worst deviation {worst:.2e} (bound {bound:.0e})"))
}

fn semigroup_expansion() -> Outcome {
    let mut notes = Vec::new();
    for alpha in [1.0, 2.0] {
        let cfg = config(&format!(
            "[motion]\nalpha = {alpha}\ndim = 1\n[experiment]\nfunctions = [\"gaussian-bump\"]\nexpansion_orders = [0, 2]\nexpansion_times = [4.0, 16.0, 64.0, 256.0]\n"
        ));
        let r = run_semigroup_expansion_study(&cfg).map_err(|e| e.to_string())?;
        checks(
            &r,
            &[
                "expansion tail decreasing (order 0)",
                "expansion tail decreasing (order 2)",
            ],
        )
        .map_err(|e| format!("alpha={alpha}: {e}"))?;
        for order in [0, 2] {
            notes.push(format!(
                "a={alpha} N={order}: {}",
                series(&r, &format!("expansion_error_order{order}"))
            ));
        }
    }
    Ok(notes.join("; "))
}

fn qv_matching() -> Outcome {
    let cfg = config(
        "[motion]\nalpha = 2.0\ndim = 1\n[schedule]\nkind = \"constant\"\nc = 1.0\n[system]\nparticles = 500\nstep = 0.01\n[experiment]\nreplicas = 64\nseed = 5005\ntimes = [2.0]\nfunctions = [\"gaussian-bump\"]\nqv_threshold = 5.0\n",
    );
    let r = run_martingale_checks(&cfg).map_err(|e| e.to_string())?;
    let summary = checks(&r, &["quadratic variation"])?;
    Ok(format!(
        "{summary}; jump QV minus compensator {}; compensator {}; motion QV, O(1/N), reported apart {}",
        series(&r, "qv_gap"),
        series(&r, "qv_compensator"),
        series(&r, "qv_motion")
    ))
}

fn mean_evolution() -> Outcome {
    let cfg = config(
        "[motion]\nalpha = 1.5\ndim = 1\n[schedule]\nkind = \"polynomial\"\nn = 2.0\n[system]\nparticles = 100\nstep = 0.01\ninitial = { kind = \"gaussian\", center = [0.3], std = 0.5 }\n[experiment]\nreplicas = 256\nseed = 6006\ntimes = [0.5, 1.0, 2.0]\nfunctions = [\"gaussian-bump\", \"cosine-window:radius=2\", \"odd-bump\"]\nz_threshold = 4.0\n",
    );
    let r = run_martingale_checks(&cfg).map_err(|e| e.to_string())?;
    let summary = checks(&r, &["mean evolution"])?;
    let worst = r
        .checks_named("mean evolution")
        .filter_map(|c| c.z)
        .fold(0.0f64, |a, z| a.max(z.abs()));
    Ok(format!("{summary}, largest |z| {worst:.2}"))
}

fn martingale_corrector() -> Outcome {
    let cfg = config(
        "[motion]\nalpha = 2.0\ndim = 1\n[schedule]\nkind = \"exponential\"\nbeta = 1.0\n[system]\nparticles = 1000\nstep = 0.01\n[experiment]\nreplicas = 64\nseed = 7007\ntimes = [1.0, 2.0, 4.0, 8.0]\nfunctions = [\"gaussian-bump\"]\nz_threshold = 4.0\n",
    );
    let r = run_martingale_checks(&cfg).map_err(|e| e.to_string())?;
    let summary = checks(&r, &["martingale nullity", "increment orthogonality"])?;
    Ok(format!(
        "{summary}; M {}; lag-1 correlation {}",
        series(&r, "martingale"),
        series(&r, "increment_correlation")
    ))
}

const SCALING_SYSTEM: &str = "[motion]\nalpha = 2.0\ndim = 1\n[schedule]\nkind = \"exponential\"\nbeta = 1.0\n[system]\nparticles = 2000\nstep = 0.01\n";

fn mass_scaling() -> Outcome {
    let cfg = config(&format!(
        "{SCALING_SYSTEM}[experiment]\nreplicas = 64\nseed = 20261016\ntimes = [2.0, 4.0, 8.0]\nfunctions = [\"gaussian-bump:width=2\"]\norder = 0\ntolerance = 0.15\n"
    ));
    let r = run_mass_scaling(&cfg).map_err(|e| e.to_string())?;
    if r.exploratory {
        return Err(format!("run is exploratory: {:?}", r.notices));
    }
    let summary = checks(&r, &["mass trend", "mass final"])?;
    let target = r.estimates_of("mass").next().and_then(|e| e.target).unwrap_or(f64::NAN);
    Ok(format!("{summary}; t^(1/2) X {} -> {target:.4}", series(&r, "mass")))
}

fn occupation_scaling() -> Outcome {
    let cfg = config(&format!(
        "{SCALING_SYSTEM}[experiment]\nreplicas = 64\nseed = 20261016\ntimes = [2.0, 4.0, 8.0]\nfunctions = [\"gaussian-bump:width=0.25\"]\ntolerance = 0.15\nagreement_threshold = 2.0\n"
    ));
    let r = run_occupation_scaling(&cfg).map_err(|e| e.to_string())?;
    if r.exploratory {
        return Err(format!("run is exploratory: {:?}", r.notices));
    }
    let summary = checks(
        &r,
        &[
            "occupation approach",
            "inhabitation approach",
            "occupation final",
            "inhabitation final",
            "occupation-inhabitation agreement",
        ],
    )?;
    let target = r
        .estimates_of("occupation")
        .next()
        .and_then(|e| e.target)
        .unwrap_or(f64::NAN);
    Ok(format!(
        "{summary}; Y/sqrt(t) {}; Z/sqrt(t) {} -> {target:.4}",
        series(&r, "occupation"),
        series(&r, "inhabitation")
    ))
}

fn high_dimension() -> Outcome {
    let cfg = config(
        "[motion]\nalpha = 1.0\ndim = 2\n[schedule]\nkind = \"exponential\"\nbeta = 1.0\n[system]\nparticles = 500\nstep = 0.05\n[experiment]\nreplicas = 64\nseed = 10010\nlattice_q = 2.0\nlattice_range = [1, 4]\nfunctions = [\"gaussian-bump\"]\n",
    );
    let r = run_occupation_scaling(&cfg).map_err(|e| e.to_string())?;
    let summary = checks(&r, &["occupation increments decreasing", "inhabitation identity"])?;
    Ok(format!(
        "{summary}; E|dY| {}; E|dM| {}",
        series(&r, "occupation_increment"),
        series(&r, "corrector_increment")
    ))
}

fn integrability_checker() -> Outcome {
    let exp = SamplingSchedule::new(ScheduleKind::Exponential { beta: 1.0 }).unwrap();
    let poly = SamplingSchedule::new(ScheduleKind::Polynomial { n: 2.0 }).unwrap();
    let flat = SamplingSchedule::new(ScheduleKind::Constant { c: 1.0 }).unwrap();
    // Mass scaling at order 0 in d = 1, alpha = 2: p = 1/2, eps0 = 0.01.
    let a = check_phi_integrability(&exp, 0.5, 0.01).map_err(|e| e.to_string())?;
    let b = check_phi_integrability(&poly, 0.5, 0.01).map_err(|e| e.to_string())?;
    let c = check_phi_integrability(&flat, -1.0, 0.0).map_err(|e| e.to_string())?;
    if a.passed() && !b.passed() && !c.passed() {
        Ok(format!("e^t {}, 1+t^2 {}, constant {}", a.kind, b.kind, c.kind))
    } else {
        Err(format!(
            "e^t {} ({}), 1+t^2 {} ({}), constant {} ({})",
            a.kind, a.reason, b.kind, b.reason, c.kind, c.reason
        ))
    }
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let text = "[motion]\nalpha = 1.5\ndim = 2\n[system]\nparticles = 60\nstep = 0.05\n[experiment]\nreplicas = 6\nseed = 12012\ntimes = [0.5, 1.0]\nfunctions = [\"gaussian-bump\", \"odd-bump\"]\n";
    let produce = |dir: &Path| -> Result<(), String> {
        let mut cfg = config(text);
        let mut reports = Vec::new();
        cfg.experiment.id = Some("mass".into());
        reports.push(run_mass_scaling(&cfg).map_err(|e| e.to_string())?);
        cfg.experiment.id = Some("martingale".into());
        reports.push(run_martingale_checks(&cfg).map_err(|e| e.to_string())?);
        let doc = summarize(reports).map_err(|e| e.to_string())?;
        doc.write(dir).map_err(|e| e.to_string())?;
        let mut rc = cfg.run_config(60, 3).map_err(|e| e.to_string())?;
        rc.initial = InitialDistribution::UniformBall {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let out = run(&rc).map_err(|e| e.to_string())?;
        let mut w = csv::Writer::from_path(dir.join("snapshots.csv")).map_err(|e| e.to_string())?;
        w.write_record(ParticleState::csv_header(2)).map_err(|e| e.to_string())?;
        for s in &out.snapshots {
            s.state.write_csv(&mut w).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())?;
        let events = std::fs::File::create(dir.join("events.csv")).map_err(|e| e.to_string())?;
        out.events.write_csv(events).map_err(|e| e.to_string())?;
        let nodes = std::fs::File::create(dir.join("genealogy.csv")).map_err(|e| e.to_string())?;
        out.arena.write_nodes_csv(nodes).map_err(|e| e.to_string())?;
        Ok(())
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    produce(a.path())?;
    produce(b.path())?;
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    if ta.len() < 5 {
        return Err(format!("only {} files written", ta.len()));
    }
    if ta != tb {
        let differing: Vec<&str> = ta
            .iter()
            .zip(&tb)
            .filter(|(x, y)| x != y)
            .map(|(x, _)| x.0.as_str())
            .collect();
        return Err(format!("outputs differ: {differing:?}"));
    }
    let bytes: usize = ta.iter().map(|(_, v)| v.len()).sum();
    Ok(format!("{} files, {bytes} bytes identical across two runs", ta.len()))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "kernel oracles", budget: Duration::from_secs(10), run: kernel_oracles },
        Criterion { id: 2, name: "constant oracles", budget: Duration::from_secs(5), run: constant_oracles },
        Criterion { id: 3, name: "sampler calibration", budget: Duration::from_secs(60), run: sampler_calibration },
        Criterion { id: 4, name: "semigroup expansion", budget: Duration::from_secs(60), run: semigroup_expansion },
        Criterion { id: 5, name: "quadratic variation matching", budget: Duration::from_secs(120), run: qv_matching },
        Criterion { id: 6, name: "mean evolution", budget: Duration::from_secs(120), run: mean_evolution },
        Criterion { id: 7, name: "martingale corrector", budget: Duration::from_secs(300), run: martingale_corrector },
        Criterion { id: 8, name: "mass scaling", budget: Duration::from_secs(900), run: mass_scaling },
        Criterion { id: 9, name: "occupation scaling", budget: Duration::from_secs(900), run: occupation_scaling },
        Criterion { id: 10, name: "high-dimension convergence", budget: Duration::from_secs(600), run: high_dimension },
        Criterion { id: 11, name: "integrability checker", budget: Duration::from_secs(1), run: integrability_checker },
        Criterion { id: 12, name: "determinism", budget: Duration::from_secs(120), run: determinism },
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let over = elapsed > c.budget;
        let (ok, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; exceeded the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<30} {} ({:.1}s) {detail}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
