//! `fvlab`: samplers, constant tables, single runs and scaling experiments.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 a reported
//! check failed, 3 internal error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fvlab::analytics::{check_phi_integrability, constants_table, write_constants_csv};
use fvlab::lab::{run_experiment, summarize, ExperimentConfig, ExperimentKind, ReportDocument};
use fvlab::moran::{run, ParticleState};
use fvlab::stable_motion::sample_isotropic_increment_into;
use fvlab::{Error, RngStream, StableParams};

#[derive(Parser, Debug)]
#[command(name = "fvlab", version, about = "Stable Fleming-Viot particle systems and their scaling limits")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "FVLAB_OUT")]
    out: Option<PathBuf>,
    /// More progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Worker threads for replica-level parallelism.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw stable increments and compare their characteristic function.
    Sample(SampleArgs),
    /// Tabulate theta, kappa and gamma.
    Constants(ConstantsArgs),
    /// One run of the particle system with snapshot, event and genealogy export.
    Simulate(SimulateArgs),
    /// Scaled mass t^{d/alpha} X_t(f) against its limit.
    ScaleMass(ExperimentArgs),
    /// Scaled occupation and inhabitation times against their limit.
    ScaleOccupation(ExperimentArgs),
    /// Martingale and quadratic-variation checks.
    CheckMartingale(ExperimentArgs),
    /// Deterministic semigroup expansion errors.
    ExpansionStudy(ExperimentArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time of the increment.
    #[arg(long, default_value_t = 1.0)]
    time: f64,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    max_order: u32,
    /// Times at which gamma is tabulated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 10.0, 100.0])]
    times: Vec<f64>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    replicas: Option<u64>,
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write the ancestral paths of the living particles.
    #[arg(long)]
    paths: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exit 0 even when a check fails.
    #[arg(long)]
    report_only: bool,
}

enum Failure {
    Usage(String),
    Checks(usize),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidParameter { .. }
            | Error::InvalidGrid(_)
            | Error::DuplicateExperiment(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Unsupported(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.jobs {
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j as usize).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure::Internal(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Sample(a) => cmd_sample(cli, a),
        Command::Constants(a) => cmd_constants(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::ScaleMass(a) => cmd_experiment(cli, a, ExperimentKind::MassScaling),
        Command::ScaleOccupation(a) => cmd_experiment(cli, a, ExperimentKind::OccupationScaling),
        Command::CheckMartingale(a) => cmd_experiment(cli, a, ExperimentKind::MartingaleChecks),
        Command::ExpansionStudy(a) => cmd_experiment(cli, a, ExperimentKind::SemigroupExpansion),
    }
}

fn output_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf, Failure> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("fvlab-out"));
    std::fs::create_dir_all(&dir).map_err(|e| {
        Failure::Usage(format!("output directory {} is not writable: {e}", dir.display()))
    })?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load_config(cli: &Cli, common: &CommonArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.experiment.seed = s;
    }
    if let Some(r) = common.replicas {
        cfg.experiment.replicas = r as usize;
    }
    if let Some(l) = &common.label {
        cfg.output.label = Some(l.clone());
    }
    if cli.verbose > 0 {
        eprintln!(
            "config: alpha={} d={} N={} R={} seed={}",
            cfg.motion.alpha,
            cfg.motion.dim,
            cfg.system.particles,
            cfg.experiment.replicas,
            cfg.experiment.seed
        );
    }
    Ok(cfg)
}

fn cmd_sample(cli: &Cli, a: &SampleArgs) -> Result<(), Failure> {
    let params = StableParams::new(a.alpha, a.dim)?;
    if !(a.time > 0.0 && a.time.is_finite()) {
        return Err(Failure::Usage(format!("--time {} must be positive", a.time)));
    }
    if a.count == 0 {
        return Err(Failure::Usage("--count must be positive".into()));
    }
    let dir = output_dir(cli, None)?;
    let path = dir.join("samples.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let header: Vec<String> = (1..=a.dim).map(|i| format!("x{i}")).collect();
    w.write_record(&header).map_err(Error::from)?;
    let mut rng = RngStream::new(a.seed, 0);
    let mut x = vec![0.0; a.dim];
    let thetas = [0.5, 1.0, 2.0];
    let mut cf = [0.0; 3];
    for _ in 0..a.count {
        sample_isotropic_increment_into(&params, a.time, &mut rng, &mut x)?;
        w.write_record(x.iter().map(|v| v.to_string()))
            .map_err(Error::from)?;
        for (c, th) in cf.iter_mut().zip(thetas) {
            *c += (th * x[0]).cos();
        }
    }
    w.flush().map_err(|e| Failure::Usage(e.to_string()))?;
    let m = a.count as f64;
    println!("wrote {} draws to {}", a.count, path.display());
    for (c, th) in cf.iter().zip(thetas) {
        println!(
            "theta={th} empirical_cf={:.6} exact={:.6} bound={:.6}",
            c / m,
            (-a.time * th.powf(a.alpha)).exp(),
            4.0 / m.sqrt()
        );
    }
    Ok(())
}

fn cmd_constants(cli: &Cli, a: &ConstantsArgs) -> Result<(), Failure> {
    let params = StableParams::new(a.alpha, a.dim)?;
    let rows = constants_table(&params, a.max_order, &a.times)?;
    let dir = output_dir(cli, None)?;
    let path = dir.join("constants.csv");
    write_constants_csv(&rows, create(&path)?)?;
    let stdout = io::stdout();
    write_constants_csv(&rows, stdout.lock())?;
    Ok(())
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), Failure> {
    let cfg = load_config(cli, &a.common)?;
    cfg.validate()?;
    let dir = output_dir(cli, Some(&cfg))?;
    let schedule = cfg.sampling_schedule()?;
    let verdict = check_phi_integrability(&schedule, -1.0, 0.0)?;
    if !verdict.passed() {
        eprintln!(
            "warning: inverse sampling rate is not integrable ({}): {}",
            verdict.kind, verdict.reason
        );
    }
    let rc = cfg.run_config(cfg.system.particles, 0)?;
    let out = run(&rc)?;

    let mut w = csv::Writer::from_writer(create(&dir.join("snapshots.csv"))?);
    w.write_record(ParticleState::csv_header(rc.params.dim()))
        .map_err(Error::from)?;
    for s in &out.snapshots {
        s.state.write_csv(&mut w)?;
    }
    w.flush().map_err(Error::from)?;

    out.events.write_csv(create(&dir.join("events.csv"))?)?;
    out.arena.write_nodes_csv(create(&dir.join("genealogy.csv"))?)?;
    if a.paths {
        out.arena.write_paths_csv(
            out.final_state.lineage_ids(),
            rc.horizon,
            create(&dir.join("paths.csv"))?,
        )?;
    }

    let mut w = csv::Writer::from_writer(create(&dir.join("trace.csv"))?);
    w.write_record([
        "time",
        "function",
        "x",
        "y",
        "z",
        "m",
        "qv_jump",
        "qv_compensator",
        "qv_motion",
    ])
    .map_err(Error::from)?;
    for c in out.trace.channels() {
        for (k, t) in out.trace.times().iter().enumerate() {
            w.write_record([
                t.to_string(),
                c.function.clone(),
                c.x[k].to_string(),
                c.y[k].to_string(),
                c.z[k].to_string(),
                (c.z[k] - c.y[k]).to_string(),
                c.qv_jump[k].to_string(),
                c.qv_compensator[k].to_string(),
                c.qv_motion[k].to_string(),
            ])
            .map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)?;

    let summary = serde_json::json!({
        "seed": rc.seed,
        "particles": rc.particles,
        "horizon": rc.horizon,
        "events": out.event_count,
        "genealogy_nodes": out.arena.len(),
        "settings": cfg,
        "snapshots": out.snapshots.iter().map(|s| serde_json::json!({
            "time": s.time(),
            "values": s.values,
        })).collect::<Vec<_>>(),
    });
    let mut f = create(&dir.join("run.json"))?;
    serde_json::to_writer_pretty(&mut f, &summary).map_err(Error::from)?;
    writeln!(f).map_err(Error::from)?;
    f.flush().map_err(Error::from)?;
    println!(
        "{} events, {} genealogy nodes; output in {}",
        out.event_count,
        out.arena.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs, kind: ExperimentKind) -> Result<(), Failure> {
    let cfg = load_config(cli, &a.common)?;
    let dir = output_dir(cli, Some(&cfg))?;
    let report = run_experiment(kind, &cfg)?;
    for n in &report.notices {
        eprintln!("warning: {n}");
    }
    if report.exploratory {
        eprintln!("warning: run labeled exploratory");
    }
    let doc: ReportDocument = summarize(vec![report])?;
    let files = doc.write(&dir)?;
    let report = &doc.reports[0];
    for c in &report.checks {
        let at = c.t.map(|t| format!(" t={t}")).unwrap_or_default();
        println!(
            "{} {} [{}]{at}: statistic={:.6} stderr={:.3e} target={:.6}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.function,
            c.statistic,
            c.stderr,
            c.target
        );
    }
    if cli.verbose > 0 {
        for f in &files {
            eprintln!("wrote {}", f.display());
        }
    }
    println!("report: {}", dir.join("report.json").display());
    let failed = report.failed_checks().count();
    if failed > 0 && !a.report_only {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}
