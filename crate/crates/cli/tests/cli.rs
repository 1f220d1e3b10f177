use std::path::Path;
use std::process::{Command, Output};

fn ac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ac-sharp")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn tiny(dir: &Path) -> Vec<String> {
    [
        "epsilons=[0.2]".to_string(),
        "t_final=0.004".to_string(),
        "diag_every=0.002".to_string(),
        "snapshot_every=0.002".to_string(),
        format!("output_dir={}", dir.display()),
    ]
    .into_iter()
    .flat_map(|o| ["--override".to_string(), o])
    .collect()
}

fn with<'a>(head: &[&'a str], tail: &'a [String]) -> Vec<&'a str> {
    head.iter().copied().chain(tail.iter().map(String::as_str)).collect()
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(code(&ac(&[])), 2);
    assert_eq!(code(&ac(&["simulate"])), 2);
    assert_eq!(code(&ac(&["simulate", "--preset", "nope"])), 2);
    assert_eq!(code(&ac(&["simulate", "--config", "/nonexistent/cfg.json"])), 2);
    assert_eq!(code(&ac(&["profile", "--preset", "mp90", "--override", "no_such_key=1"])), 2);
    assert_eq!(code(&ac(&["profile", "--preset", "mp90", "--override", "alpha_deg"])), 2);
    assert_eq!(code(&ac(&["profile", "--preset", "mp90", "--override", "alpha_deg=120"])), 2);
    assert_eq!(code(&ac(&["converge", "--preset", "mp90", "--override", "epsilons=[0.1,0.05]"])), 2);
    assert_eq!(code(&ac(&["export", "--run-dir", "/nonexistent/run"])), 2);
    let o = ac(&["calibrate-check", "--preset", "mp60", "--eps-index", "7"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of range"));
}

#[test]
fn profile_reports_surface_tension() {
    let o = ac(&["profile", "--preset", "mp90", "--samples", "11", "--truncation", "3"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!((v["c_f"].as_f64().unwrap() - 0.825929886762317).abs() < 1e-10);
    assert_eq!(v["t"].as_array().unwrap().len(), 11);
    let tr = v["alpha_trunc"].as_array().unwrap();
    assert_eq!(tr[0].as_f64(), Some(-1.0));
    assert_eq!(tr[10].as_f64(), Some(1.0));
}

#[test]
fn config_file_and_overrides() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = acsharp::config::RunConfig::preset("mp60").unwrap();
    cfg.alpha_deg = 45.0;
    let p = d.path().join("cfg.json");
    std::fs::write(&p, cfg.to_json()).unwrap();
    // a 60 deg arc with alpha = 45 is rejected at setup
    let args = tiny(d.path());
    let o = ac(&with(&["simulate", "--config", p.to_str().unwrap()], &args));
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let o = ac(&with(&["simulate", "--config", p.to_str().unwrap(), "--override", "alpha_deg=60"], &args));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn numerical_failure_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let args = tiny(d.path());
    let o = ac(&with(&["simulate", "--preset", "mp60", "--override", "tol_dissip=1e-30"], &args));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dissipation"));
}

#[test]
fn simulate_extract_export() {
    let d = tempfile::tempdir().unwrap();
    let args = tiny(d.path());
    let o = ac(&with(&["simulate", "--preset", "mp60"], &args));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let runs = stdout_json(&o);
    assert_eq!(runs.as_array().unwrap().len(), 1);
    let run = d.path().join("eps_0.2");
    for f in ["diagnostics.csv", "curves.csv", "summary.json", "fields/u_0.json", "fields/u_0.bin"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let snap = run.join("fields").join("u_0");
    let o = ac(&["extract-interface", "--preset", "mp60", "--reference", "--snapshot", snap.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let e = stdout_json(&o);
    assert!(e["hausdorff"].as_f64().unwrap() < 0.05);
    assert!(!e["polyline"].as_array().unwrap().is_empty());
    let o = ac(&["extract-interface", "--preset", "mp60", "--snapshot", "/nonexistent/u_0"]);
    assert_eq!(code(&o), 2);

    let o = ac(&["export", "--run-dir", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ex = d.path().join("export");
    for f in ["report.json", "summary.csv", "convergence.dat", "diagnostics_eps_0.2.dat"] {
        assert!(ex.join(f).is_file(), "{f}");
    }
}
