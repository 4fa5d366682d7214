use std::path::Path;
use std::process::{Command, Output};

fn wcorners(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcorners"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_L1: &str = r#"{
    "experiment": "l1-stationarity",
    "ensemble": {"kind": "resampled-unimodular", "beta": 2},
    "m": 50,
    "trials": 100,
    "seed": 9,
    "deltas": [0.0, 0.5]
}"#;

#[test]
fn help_lists_subcommands() {
    let o = wcorners(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for sub in ["simulate", "moments", "oracle", "diagram", "tw", "verify"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    for flag in ["--config", "--seed", "--out", "--threads"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn simulate_is_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_L1);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = wcorners(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = wcorners(&["simulate", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "3"]);
    assert!(o.status.success());
    for f in ["result.json", "samples.csv", "correlation.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let csv = std::fs::read_to_string(a.join("correlation.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "delta,corr_s,corr_t,corr_s_se,corr_t_se,diff,stderr"
    );
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["timestamp"], "2023-11-14T22:13:20Z");
    assert_eq!(json["metadata"]["seed"], 9);
    assert_eq!(json["metadata"]["config_sha256"].as_str().unwrap().len(), 64);
    let rows = json["rows"].as_array().unwrap();
    let corr0 = rows.iter().find(|r| r["name"] == "corr_s/delta=0").unwrap();
    assert_eq!(corr0["value"], 1.0);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_L1);
    let a = tmp.path().join("a");
    let o = wcorners(&["simulate", "--config", &cfg, "--seed", "11", "--out", a.to_str().unwrap()]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["seed"], 11);
}

#[test]
fn invalid_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL_L1.replace("\"trials\": 100", "\"trials\": 0"));
    let o = wcorners(&["simulate", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
    let cfg = write_config(tmp.path(), &SMALL_L1.replace("\"seed\"", "\"sead\""));
    let o = wcorners(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_single_path_writes_spectra_and_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let o = wcorners(&[
        "simulate", "--kind", "gaussian-ou", "--beta", "1", "--m", "60", "--s", "0,0.5", "--t-min", "-0.2",
        "--t-max", "0.2", "--j-max", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let spectra = std::fs::read_to_string(out.join("spectra.csv")).unwrap();
    assert_eq!(spectra.lines().next().unwrap(), "tau,n,j,xi");
    let lines = std::fs::read_to_string(out.join("lines.csv")).unwrap();
    assert_eq!(lines.lines().next().unwrap(), "M,s,t,j,lambda");
    let rows: Vec<&str> = lines.lines().skip(1).collect();
    assert!(!rows.is_empty() && rows.len() % 6 == 0);
    assert!(rows.iter().all(|r| r.starts_with("60,")));
}

#[test]
fn oracle_and_moments_agree_on_second_moment() {
    let args = ["--kind", "resampled-unimodular", "--beta", "1", "--exponents", "2", "--times", "0", "--sizes", "4"];
    let o = wcorners(&[&["oracle"], &args[..]].concat());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    let o = wcorners(&[&["moments"], &args[..], &["--trials", "200"]].concat());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["estimate"].as_f64().unwrap() - 0.75).abs() < 1e-12);
}

#[test]
fn diagram_closed_form() {
    let o = wcorners(&["diagram", "--name", "fig1-left", "--alpha", "2", "--s", "0", "--t", "0"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-14);
    let o = wcorners(&["diagram", "--name", "no-such", "--alpha", "2", "--s", "0", "--t", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tw_regenerates_shipped_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wcorners(&["tw", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/tw");
    for f in ["tw-beta1.csv", "tw-beta2.csv"] {
        let fresh = std::fs::read_to_string(tmp.path().join(f)).unwrap();
        let old = std::fs::read_to_string(shipped.join(f)).unwrap();
        assert_eq!(fresh, old, "{f} is stale; regenerate with `wcorners tw --out crates/core/data/tw`");
    }
    let o = wcorners(&["tw", "--beta", "1", "--method", "fredholm", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_prints_one_line_per_criterion() {
    let o = wcorners(&["verify", "--criteria", "2,11"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("criterion  2 PASS"));
    assert!(lines[1].starts_with("criterion 11 PASS"));
}
