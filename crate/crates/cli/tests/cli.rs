use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fvlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fvlab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("FVLAB_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
[motion]
alpha = 2.0
dim = 1

[schedule]
kind = "exponential"
beta = 1.0

[system]
particles = 20
step = 0.05

[experiment]
replicas = 4
seed = 11
times = [0.5, 1.0]
functions = ["gaussian-bump"]
"#;

fn small_config(dir: &Path, schedule: Option<&str>) -> String {
    let text = match schedule {
        Some(s) => SMALL.replace("kind = \"exponential\"\nbeta = 1.0", s),
        None => SMALL.to_string(),
    };
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sample_is_deterministic_and_writes_every_draw() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["sample", "--alpha", "1.5", "--dim", "2", "--count", "500", "--seed", "42"];
    let oa = fvlab(&a, &args);
    let ob = fvlab(&b, &args);
    assert!(oa.status.success(), "{}", stderr(&oa));
    assert!(ob.status.success());
    let sa = fs::read_to_string(a.join("samples.csv")).unwrap();
    let sb = fs::read_to_string(b.join("samples.csv")).unwrap();
    assert_eq!(sa, sb);
    let lines: Vec<&str> = sa.lines().collect();
    assert_eq!(lines[0], "x1,x2");
    assert_eq!(lines.len(), 501);
    assert!(stdout(&oa).contains("empirical_cf"));
}

#[test]
fn invalid_alpha_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fvlab(tmp.path(), &["sample", "--alpha", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fvlab(tmp.path(), &["constants", "--alpha", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fvlab(tmp.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn constants_table_has_the_gaussian_values() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fvlab(tmp.path(), &["constants", "--alpha", "2", "--dim", "1", "--max-order", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("constants.csv")).unwrap();
    assert_eq!(stdout(&o), csv);
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    let mut seen = 0;
    for rec in rows.records() {
        let rec = rec.unwrap();
        let value = &rec[3];
        match &rec[2] {
            "(0)" | "0" => {
                let v: f64 = value.parse().unwrap();
                assert!((v - 0.282_094_791_773_878_1).abs() < 1e-15);
                seen += 1;
            }
            "(1)" | "1" | "(3)" | "3" => {
                assert_eq!(value.parse::<f64>().unwrap(), 0.0);
                seen += 1;
            }
            "kappa" => {
                let v: f64 = value.parse().unwrap();
                assert!((v - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
            }
            _ => {}
        }
    }
    assert_eq!(seen, 3, "{csv}");
}

#[test]
fn kappa_is_undefined_in_high_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fvlab(tmp.path(), &["constants", "--alpha", "1", "--dim", "2", "--max-order", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.contains("kappa") && l.ends_with("undefined")));
}

#[test]
fn experiments_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), None);
    let out = tmp.path().join("out");
    let o = fvlab(&out, &["check-martingale", "--config", &cfg, "--report-only"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("martingale nullity"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let report = &json["reports"][0];
    assert_eq!(report["experiment"], "martingale-checks");
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["stderr"].is_number()));
}

#[test]
fn weak_schedules_are_flagged_exploratory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), Some("kind = \"constant\"\nc = 1.0"));
    let out = tmp.path().join("out");
    let o = fvlab(&out, &["scale-mass", "--config", &cfg, "--report-only"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["reports"][0]["exploratory"], true);
}

#[test]
fn zero_replicas_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), None);
    let o = fvlab(tmp.path(), &["scale-mass", "--config", &cfg, "--replicas", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fvlab(tmp.path(), &["scale-mass", "--config", "/no/such/file.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seed_override_reproduces_reports_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), None);
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = fvlab(&out, &["check-martingale", "--config", &cfg, "--seed", seed, "--report-only"]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("report.json")).unwrap()
    };
    let a = run("a", "99");
    assert_eq!(a, run("b", "99"));
    assert_ne!(a, run("c", "100"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_fvlab"))
        .args(["sample", "--alpha", "1", "--count", "10"])
        .env("FVLAB_OUT", &out)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("samples.csv").exists());
}

#[test]
fn simulate_writes_its_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), None);
    let out = tmp.path().join("sim");
    let o = fvlab(&out, &["simulate", "--config", &cfg, "--paths"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["snapshots.csv", "events.csv", "genealogy.csv", "paths.csv", "trace.csv", "run.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let events = fs::read_to_string(out.join("events.csv")).unwrap();
    assert_eq!(events.lines().next(), Some("time,source,target"));
    let times: Vec<f64> = events
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]));
}
