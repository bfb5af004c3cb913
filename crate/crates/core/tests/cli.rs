use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_socioclimate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn simulate_writes_csv_with_all_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = bin(&[
        "simulate",
        "--variant",
        "baseline",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# params_fingerprint="));
    assert!(lines[1].starts_with("t,x,C_at"));
    assert_eq!(lines.len() - 2, 401);
    assert!(lines[2].starts_with("1800,"));
    assert!(lines[402].starts_with("2200,"));
}

#[test]
fn simulate_jsonl_has_one_object_per_sample() {
    let o = bin(&["simulate", "--format", "jsonl"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 401);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["T"].is_number());
    }
}

#[test]
fn missing_emissions_file_is_an_input_error() {
    let o = bin(&["simulate", "--emissions", "/nonexistent/emissions.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "social.nonsense = 1\n").unwrap();
    let o = bin(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("social.nonsense"));
}

#[test]
fn compare_without_tipping_flux() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("r0.cfg");
    std::fs::write(&cfg, "tipping.R_max = 0\n").unwrap();
    let o = bin(&["compare", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["auc_diff"].as_f64(), Some(0.0));
    assert_eq!(v["tipped"], false);
    assert_eq!(v["time_to_tip"].as_array().unwrap().len(), 3);
}

#[test]
fn compare_tipping_case() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    std::fs::write(&cfg, "social.kappa = 0.01\ntipping.R_max = 5\n").unwrap();
    let o = bin(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--preset",
        "high_risk",
    ]);
    assert!(o.status.success());
    assert_eq!(json(&o)["tipped"], true);
}

#[test]
fn ratio_threshold_must_exceed_one() {
    assert_eq!(bin(&["compare", "--d", "1.1,1.0"]).status.code(), Some(1));
}

#[test]
fn sweep_writes_records_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = bin(&[
        "sweep",
        "--x",
        "social.kappa:0.001:0.2:3",
        "--y",
        "tipping.R_max:0:5:2",
        "--preset",
        "low_risk",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    assert!(text.lines().next().unwrap().contains("time_to_tip_d1.25"));

    let manifest_path = format!("{}.manifest.json", out.display());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&manifest_path)).unwrap()).unwrap();
    assert_eq!(m["points"], 6);
    assert_eq!(m["preset"], "low_risk");
    assert_eq!(m["workers"], 2);
    assert_eq!(m["axes"][0]["path"], "social.kappa");
    assert!(m["params"].as_str().unwrap().contains("tipping.T_c = 3"));
}

#[test]
fn sweep_axis_errors_are_usage_errors() {
    let same = bin(&[
        "sweep",
        "--x",
        "social.kappa:0:1:3",
        "--y",
        "social.kappa:0:1:3",
        "--out",
        "/tmp/unused.csv",
    ]);
    assert_eq!(same.status.code(), Some(1));
    let unknown = bin(&[
        "sweep",
        "--x",
        "social.nope:0:1:3",
        "--y",
        "social.beta:0:1:3",
        "--out",
        "/tmp/unused.csv",
    ]);
    assert_eq!(unknown.status.code(), Some(1));
    let malformed = bin(&[
        "sweep",
        "--x",
        "social.kappa:0:1",
        "--y",
        "social.beta:0:1:3",
        "--out",
        "/tmp/unused.csv",
    ]);
    assert_eq!(malformed.status.code(), Some(1));
}

#[test]
fn sensitivity_lists_whitelist() {
    let o = bin(&["sensitivity", "--list-params"]);
    assert!(o.status.success());
    let keys: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(keys.contains(&"climate.S_flux".to_string()));
    assert!(!keys.iter().any(|k| k.starts_with("schedule.")));
}

#[test]
fn sensitivity_fraction_sets_perturbation() {
    let o = bin(&["sensitivity", "--fraction", "0.1", "--format", "jsonl"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let kappa: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["path"] == "social.kappa")
        .collect();
    let values: Vec<f64> = kappa.iter().map(|v| v["value"].as_f64().unwrap()).collect();
    assert!(values.iter().any(|v| (v - 0.055).abs() < 1e-12));
    assert!(values.iter().any(|v| (v - 0.045).abs() < 1e-12));

    assert_eq!(
        bin(&["sensitivity", "--fraction", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn equilibria_cases() {
    let v = json(&bin(&[
        "equilibria",
        "--beta",
        "2.5",
        "--delta",
        "1",
        "--temperature",
        "1.5",
    ]));
    assert_eq!(v["psi"].as_f64(), Some(0.0));
    assert_eq!(v["points"].as_array().unwrap().len(), 3);

    // beta chosen so that psi = 2 at T = T_lim.
    let v = json(&bin(&[
        "equilibria",
        "--beta",
        "0.5",
        "--delta",
        "1",
        "--temperature",
        "1.5",
    ]));
    assert_eq!(v["points"][0]["x_star"].as_f64(), Some(0.0));
    assert_eq!(v["points"][0]["stability"], "unstable");

    let v = json(&bin(&[
        "equilibria",
        "--beta",
        "1",
        "--delta",
        "0",
        "--temperature",
        "1.5",
    ]));
    assert_eq!(v["points"].as_array().unwrap().len(), 2);

    assert_eq!(
        bin(&[
            "equilibria",
            "--beta",
            "1",
            "--delta",
            "-1",
            "--temperature",
            "1"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(bin(&["equilibria", "--beta", "1"]).status.code(), Some(1));
}

#[test]
fn trigger_reports_threshold() {
    let o = bin(&["trigger", "--betas", "0:5:11", "--tol", "0.01"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["records"].as_array().unwrap().len(), 11);
    let t = &v["threshold"];
    assert!(t["hi"].as_f64().unwrap() - t["lo"].as_f64().unwrap() <= 0.01);
}
