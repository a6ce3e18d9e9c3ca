use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wittenlab")).args(args).output().expect("binary runs")
}

fn run_config(cmd: &str, config: &Path, out: &Path) -> Output {
    run(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"])
}

fn config(name: &str) -> PathBuf {
    repo().join("configs").join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, doc: &Value) {
    let schema = read_json(&repo().join("schemas").join(schema_name));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

#[test]
fn witten_tanh_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("witten", &config("tanh.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "delta_r.csv", "delta_s.csv", "xi_A.csv", "xi_H.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["w_xi"], 1.0);
    assert_eq!(report["fredholm"]["fredholm"], true);
    assert_valid("report.schema.json", &report);
    assert_valid("manifest.schema.json", &read_json(&dir.path().join("manifest.json")));
    let dr = fs::read_to_string(dir.path().join("delta_r.csv")).unwrap();
    assert!(dr.starts_with("L,N,lambda,delta_r\n"));
    let ds = fs::read_to_string(dir.path().join("delta_s.csv")).unwrap();
    assert!(ds.starts_with("L,N,t,delta_s\n"));
    for line in dr.lines().skip(1).chain(ds.lines().skip(1)) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.parse::<f64>().is_ok()), "{line}");
    }
}

#[test]
fn witten_half_integer_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("witten", &config("half_integer.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["w_xi"], 0.5);
    assert_eq!(report["fredholm"]["fredholm"], false);
}

#[test]
fn identical_inputs_give_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (cmd, cfg) in [("witten", "tanh.toml"), ("ssf", "quantization.toml"), ("rankone", "rankone.toml")] {
        let (da, db) = (a.path().join(cmd), b.path().join(cmd));
        assert_eq!(run_config(cmd, &config(cfg), &da).status.code(), Some(0));
        assert_eq!(run_config(cmd, &config(cfg), &db).status.code(), Some(0));
        for entry in fs::read_dir(&da).unwrap() {
            let name = entry.unwrap().file_name();
            let (x, y) = (fs::read(da.join(&name)).unwrap(), fs::read(db.join(&name)).unwrap());
            if name == "manifest.json" {
                let strip = |bytes: &[u8]| {
                    let mut v: Value = serde_json::from_slice(bytes).unwrap();
                    v.as_object_mut().unwrap().remove("timings_ms");
                    v
                };
                assert_eq!(strip(&x), strip(&y));
            } else {
                assert!(x == y, "{cmd}/{name:?} differs between runs");
            }
        }
    }
}

#[test]
fn seed_changes_random_suite() {
    let dir = tempfile::tempdir().unwrap();
    let run_seed = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&["ssf", "--config", config("quantization.toml").to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        fs::read_to_string(out.join("quantization_suite.csv")).unwrap()
    };
    let (x, y) = (run_seed("1", "a"), run_seed("2", "b"));
    assert_ne!(x, y);
    assert!(x.lines().skip(1).all(|l| l.ends_with(",true")));
    assert_eq!(x.lines().count(), 101);
    let counting = read_json(&dir.path().join("a/counting.json"));
    assert_valid("counting.schema.json", &counting);
    assert_eq!(counting["random_suite"]["all_equal"], true);
}

#[test]
fn malformed_matrix_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[path]\na_minus = [[1.0, 0.0]]\nb_plus = [[1.0]]\n");
    let out = run_config("witten", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("path.a_minus"));
}

#[test]
fn schedule_below_floor_is_rejected_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[path]\na_minus = [[-1.0]]\nb_plus = [[2.0]]\n[grid]\nresolutions = [[10.0, 201]]\nlambda_schedules = [[-1.0, -0.01]]\n",
    );
    let out = run_config("witten", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.lambda_schedules[0]"));
}

#[test]
fn missing_plateau_exits_two_with_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[path]\na_minus = [[-1.0]]\nb_plus = [[2.0]]\n[grid]\nresolutions = [[10.0, 401], [20.0, 801]]\n\
         lambda_schedules = [[-4.0, -1.0, -0.25], [-4.0, -1.0, -0.25]]\n",
    );
    let out_dir = dir.path().join("out");
    let out = run_config("witten", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(2));
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["converged"], false);
    assert_eq!(fs::read_to_string(out_dir.join("delta_r.csv")).unwrap().lines().count(), 7);
    assert_valid("report.schema.json", &report);
}

#[test]
fn fredholm_half_integer_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("fredholm", &config("half_integer.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("not Fredholm"), "{stdout}");
    assert!(stdout.contains("gap_minus=0"), "{stdout}");
    assert_valid("fredholm.schema.json", &read_json(&dir.path().join("fredholm.json")));
}

#[test]
fn abel_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("abel", &config("abel.toml"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("abel.csv")).unwrap();
    assert!(text.starts_with("nu,abel_f,closed_form,abs_err\n"));
    for line in text.lines().skip(1) {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err <= 1e-8, "{line}");
    }
}

#[test]
fn pushnitski_indicator_arcsine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[pushnitski]\nxi = { breakpoints = [-1.0, 1.0], values = [0.0, 1.0, 0.0] }\npoints = 50\n");
    let out = run_config("pushnitski", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("out/pushnitski.csv")).unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let expected = 2.0 / std::f64::consts::PI * (1.0 / v[0].sqrt()).min(1.0).asin();
        assert!((v[1] - expected).abs() < 1e-10, "{line}");
        assert!((v[2] - expected).abs() < 1e-8, "{line}");
    }
}

#[test]
fn rankone_and_trace_check_artifacts_validate() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("rankone");
    assert_eq!(run_config("rankone", &config("rankone.toml"), &r).status.code(), Some(0));
    assert_valid("spectral_type.schema.json", &read_json(&r.join("spectral_type.json")));
    let prescribed = read_json(&r.join("prescribed.json"));
    assert_valid("prescribed.schema.json", &prescribed);
    assert!((prescribed["recovered_index"].as_f64().unwrap() - 0.37).abs() < 1e-3);

    let t = dir.path().join("trace");
    assert_eq!(run_config("trace-check", &config("tanh.toml"), &t).status.code(), Some(0));
    assert_valid("trace_relation.schema.json", &read_json(&t.join("trace_relation.json")));
    let eig = fs::read_to_string(t.join("eigenvalues.csv")).unwrap();
    assert!(eig.starts_with("index,eigenvalue_H1,eigenvalue_H2\n"));
    assert_eq!(eig.lines().count(), 2002);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["witten", "--config", dir.path().join("absent.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
