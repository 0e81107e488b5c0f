use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bai");

const MINIMAL: &str = r#"[experiment]
instance = "9"
budget = 2000
replications = 100
seed = 7
algorithms = ["simple-tracking"]
"#;

fn bai(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("BAI_WORKERS").output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn minimal_simulation_writes_51_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("out");
    let o = bai(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("poe_9_simple-tracking.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "algorithm,instance,t,errors,replications,poe,ci_low,ci_high,seed");
    assert_eq!(lines.count(), 51);
    assert!(!csv.contains('\r'));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    let entry = &manifest["outputs"][0];
    assert_eq!(entry["rows"], 51);
    assert_eq!(entry["sha256"].as_str().unwrap(), bai_cli::simulate::sha256_hex(csv.as_bytes()));

    // The echoed configuration reproduces the CSV.
    let again = dir.path().join("again");
    let cfg2 = dir.path().join("echo.toml");
    fs::write(&cfg2, manifest["config"].as_str().unwrap()).unwrap();
    let o = bai(&["simulate", "--config", cfg2.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(again.join("poe_9_simple-tracking.csv")).unwrap(), csv.as_bytes());
}

#[test]
fn overrides_change_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = dir.path().join("o");
    let o = bai(&[
        "simulate", "--config", &cfg, "--out", out.to_str().unwrap(),
        "--replications", "10", "--seed", "3", "--checkpoints", "40,100,2000", "--workers", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("poe_9_simple-tracking.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",3") && r.contains(",10,")));
}

#[test]
fn config_errors_exit_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        MINIMAL.replace("simple-tracking", "simple-trakking"),
        MINIMAL.replace("\"9\"", "\"nine\""),
        MINIMAL.replace("seed = 7", "seed = 7\ncolour = 1"),
        MINIMAL.replace("[\"simple-tracking\"]", "[\"pooled\"]"),
    ] {
        let cfg = write_config(dir.path(), &bad);
        let out = dir.path().join("never");
        let o = bai(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(!out.exists());
    }
    assert_eq!(bai(&["simulate"]).status.code(), Some(2));
    assert_eq!(bai(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = bai(&["simulate", "--config", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let cfg = write_config(dir.path(), MINIMAL);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = bai(&["simulate", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn rates_table_with_inf_and_minimax() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "algorithm,instance,t,errors,replications,poe,ci_low,ci_high,seed\nx,9,5000,0,100,0,0,0.0362,1\nx,9,10000,100,10000,0.01,0.008,0.012,1\n").unwrap();
    fs::write(&b, "algorithm,instance,t,errors,replications,poe,ci_low,ci_high,seed\ny,9,10000,0,10000,0,0,0.0004,1\n").unwrap();
    let out = dir.path().join("rates.csv");
    let o = bai(&["rates", "--csv", a.to_str().unwrap(), "--csv", b.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    let x: Vec<&str> = text.lines().find(|l| l.starts_with("x,9,")).unwrap().split(',').collect();
    let plugin: f64 = x[6].parse().unwrap();
    assert!((plugin - 0.04006).abs() < 1e-5);
    assert!(text.lines().any(|l| l.starts_with("y,9,10000,h1,") && l.contains(",inf,")));
    assert!(text.lines().any(|l| l == format!("x,minimax,,h1,,{},{},{}", x[5], x[6], x[7])));

    let h2 = bai(&["rates", "--csv", a.to_str().unwrap(), "--measure", "h2"]);
    assert!(String::from_utf8_lossy(&h2.stdout).contains(",h2,75"));

    let c = dir.path().join("c.csv");
    fs::write(&c, "algorithm,instance,t,errors,replications,poe,ci_low,ci_high,seed\ny,7,100,1,10,0.1,0,1,1\n").unwrap();
    let o = bai(&["rates", "--csv", a.to_str().unwrap(), "--csv", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_h3_reports_ten_instance_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r/h3.txt");
    let o = bai(&["check", "--suite", "h3", "--out", report.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(report).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS\th3-band-instance-")).count(), 10);
    assert!(!text.contains("FAIL"));
}

#[test]
fn check_allocation_passes_and_injection_fails() {
    let o = bai(&["check", "--suite", "allocation", "--trials", "2000"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["rounding-sum", "rounding-floor", "allocation-simplex", "allocation-d-sandwich"] {
        assert!(text.contains(&format!("PASS\t{name}")), "{name}");
    }
    let o = bai(&["check", "--suite", "all", "--trials", "500", "--replications", "2000", "--inject-violation"]);
    assert_eq!(o.status.code(), Some(4));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("FAIL\tallocation-d-sandwich") && text.contains("witness="));
}

#[test]
fn complexity_lists_registry() {
    let o = bai(&["complexity", "--instance", "9", "--instance", "7"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("9,40,2000,true,87")));
    assert!(text.lines().any(|l| l.starts_with("7,40,") && l.contains(",975")));
    assert_eq!(bai(&["complexity", "--instance", "x"]).status.code(), Some(2));
}
