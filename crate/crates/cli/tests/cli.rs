use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_flm");

const SMALL: &str = r#"
[process]
decay = { kind = "poly_decay", a = 1.0 }
sigma = 0.5
truncation = 4

[slope]
p = 1.0
rho = 1.0

[estimator]
m = 2
gamma = "n"

[experiment]
n_grid = [3, 30, 300]
replications = 20
master_seed = 11
risk = "prediction"
"#;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn flm(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("FLM_OUT_DIR").output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_one_row_per_observation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out_dir = tmp.path().join("out");
    ok(&flm(&["simulate", "-c", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]));
    let csv = std::fs::read_to_string(out_dir.join("sample.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "y,x_1,x_2,x_3,x_4");
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.split(',').count() == 5));
    assert!(!csv.contains('\r'));

    let side = json(&out_dir.join("sample.json"));
    assert_eq!(side["schema_version"], 1);
    assert_eq!(side["master_seed"], 11);
    assert!(side["seed"].is_u64());
    assert_eq!(side["config"]["experiment"]["master_seed"], 11);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&flm(&["simulate", "-c", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]));
        ok(&flm(&["estimate", "-c", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]));
    }
    for f in ["sample.csv", "sample.json", "estimate.json", "curve.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn invalid_decay_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("a = 1.0", "a = 0.4"));
    let out = flm(&["simulate", "-c", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("a > 1/2"), "{err}");
    assert!(!tmp.path().join("sample.csv").exists());
}

#[test]
fn other_validation_failures_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    for (from, to) in [
        ("m = 2", "m = 9"),
        ("m = 2", "m = \"sqrt\""),
        ("replications = 20", "replications = 1"),
        ("gamma = \"n\"", "gamma = -1.0"),
        ("risk = \"prediction\"", "risk = \"derivative\"\nrisk_weights = { kind = \"constant\" }"),
    ] {
        let cfg = write_config(tmp.path(), &SMALL.replace(from, to));
        let out = flm(&["rates", "-c", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{to}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn curve_matches_the_basis_expansion() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("truncation = 4", "truncation = 9").replace("m = 2", "m = 5"));
    let dir = tmp.path().join("out");
    ok(&flm(&["estimate", "-c", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--n", "400"]));
    let est = json(&dir.join("estimate.json"));
    let coeffs: Vec<f64> =
        est["estimate"]["coefficients"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(coeffs.len(), 9);
    assert_eq!(est["estimate"]["omega_held"], true);
    let curve = std::fs::read_to_string(dir.join("curve.csv")).unwrap();
    let rows: Vec<(f64, f64)> = curve
        .lines()
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 512);
    assert_eq!(rows[0].0, 0.0);
    assert_eq!(rows[511].0, 1.0);
    for (i, (t, v)) in rows.iter().enumerate() {
        assert_eq!(*t, i as f64 / 511.0);
        let mut expected = coeffs[0];
        for (idx, c) in coeffs.iter().enumerate().skip(1) {
            let k = idx.div_ceil(2) as f64;
            let arg = 2.0 * PI * k * t;
            let psi = if idx % 2 == 1 { arg.cos() } else { arg.sin() };
            expected += c * 2f64.sqrt() * psi;
        }
        assert!((v - expected).abs() <= 1e-10, "t = {t}: {v} vs {expected}");
    }
}

#[test]
fn estimate_reads_a_stored_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dir = tmp.path().join("out");
    let c = cfg.to_str().unwrap();
    ok(&flm(&["simulate", "-c", c, "--out", dir.to_str().unwrap(), "--n", "50"]));
    let stored = dir.join("sample.csv");
    let other = tmp.path().join("other");
    ok(&flm(&["estimate", "-c", c, "--out", other.to_str().unwrap(), "--sample", stored.to_str().unwrap()]));
    ok(&flm(&["estimate", "-c", c, "--out", dir.to_str().unwrap(), "--n", "50"]));
    let from_file = json(&other.join("estimate.json"));
    let fresh = json(&dir.join("estimate.json"));
    // both routes see the same 50 observations
    assert_eq!(from_file["estimate"], fresh["estimate"]);
    assert_eq!(from_file["sample"]["kind"], "file");
}

#[test]
fn shipped_rates_config_emits_a_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = flm(&["rates", "-c", shipped("poly_p1_a1_prediction").to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(matches!(out.status.code(), Some(0) | Some(3)));
    let v = json(&dir.join("verdict.json"));
    for key in ["schema_version", "config", "master_seed", "fitted_slope", "theory_slope", "tolerance"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    assert!(v["pass"].is_boolean());
    assert_eq!(v["tolerance"], 0.2);
    let csv = std::fs::read_to_string(dir.join("rates.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,m_star,mean_risk,std_error,omega_freq,theory_exponent,fitted_slope");
    assert_eq!(csv.lines().count(), 6);
    let dat = std::fs::read_to_string(dir.join("rates.dat")).unwrap();
    assert!(dat.lines().any(|l| l.starts_with("# master_seed")));
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert!(dir.join("rates.gp").exists());
}

#[test]
fn two_replications_are_low_power() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dir = tmp.path().join("out");
    ok(&flm(&["rates", "-c", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--replications", "2"]));
    let v = json(&dir.join("verdict.json"));
    assert_eq!(v["low_power"], true);
    assert_eq!(v["status"], "low_power");
    let reports = v["reports"].as_array().unwrap();
    assert!(reports.iter().all(|r| r["std_error"].as_f64().unwrap() >= 0.0));
}

#[test]
fn failed_verdict_exits_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg =
        write_config(tmp.path(), &SMALL.replace("risk = \"prediction\"", "risk = \"prediction\"\ntolerance = 1e-9"));
    let out = flm(&["rates", "-c", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&tmp.path().join("verdict.json"))["pass"], false);
}

#[test]
fn sidecar_reproduces_its_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg =
        write_config(tmp.path(), &SMALL.replace("risk = \"prediction\"", "risk = \"prediction\"\ntolerance = 10.0"));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&flm(&["rates", "-c", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--seed", "99"]));
    let sidecar = a.join("verdict.json");
    ok(&flm(&["rates", "-c", sidecar.to_str().unwrap(), "--out", b.to_str().unwrap()]));
    for f in ["verdict.json", "rates.csv", "rates.dat", "rates.gp"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(json(&sidecar)["master_seed"], 99);
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("from_env");
    let file_dir = tmp.path().join("from_file");
    let flag_dir = tmp.path().join("from_flag");
    let cfg = write_config(tmp.path(), SMALL);
    let run = |cfg: &Path, extra: &[&str]| {
        let mut args = vec!["simulate", "-c", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = Command::new(BIN).args(&args).current_dir(tmp.path()).env("FLM_OUT_DIR", &env_dir).output().unwrap();
        ok(&out);
    };
    run(&cfg, &[]);
    assert!(env_dir.join("sample.csv").exists());

    let with_dir = format!("{SMALL}\n[output]\ndir = {:?}\n", file_dir.to_str().unwrap());
    let cfg2 = tmp.path().join("with_dir.toml");
    std::fs::write(&cfg2, with_dir).unwrap();
    run(&cfg2, &[]);
    assert!(file_dir.join("sample.csv").exists());
    run(&cfg2, &["--out", flag_dir.to_str().unwrap()]);
    assert!(flag_dir.join("sample.csv").exists());
}

#[test]
fn lowerbound_on_a_shipped_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(&flm(&["lowerbound", "-c", shipped("poly_p1_a1_prediction").to_str().unwrap(), "--out", dir.to_str().unwrap()]));
    let r = json(&dir.join("lowerbound.json"));
    assert_eq!(r["all_hold"], true);
    let m_star = r["m_star"].as_u64().unwrap();
    let rows = std::fs::read_to_string(dir.join("lowerbound.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows as u64, if m_star <= 8 { 1 << m_star } else { 64 });
    assert_eq!(r["mirror"]["equal"], true);
    assert_eq!(r["mirror"]["plus_risk"], r["mirror"]["minus_risk"]);
    let worst = r["worst_case_risk"].as_f64().unwrap();
    let delta_star = r["delta_star"].as_f64().unwrap();
    assert!(worst >= 0.1 * delta_star, "{worst} < 0.1 · {delta_star}");
}

#[test]
fn side_condition_reports_and_validates_k() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let c = shipped("heavy_tail_m_star");
    ok(&flm(&["check-side-condition", "-c", c.to_str().unwrap(), "--out", dir.to_str().unwrap()]));
    let r = json(&dir.join("side_condition.json"));
    assert_eq!(r["k"], 8);
    assert_eq!(r["rows"].as_array().unwrap().len(), 4);
    assert!(r["verdict"] == "pass" || r["verdict"] == "warn");
    let out = flm(&["check-side-condition", "-c", c.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--k", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_config_is_a_runtime_error() {
    let out = flm(&["simulate", "-c", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
