use std::path::Path;
use std::process::{Command, Output};

use cvtrust::detector::{sample_outcomes, OutcomeDensity};
use serde_json::Value;

fn cvtrust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvtrust"))
        .args(args)
        .env_remove("CVTRUST_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn rescale_heterodyne_reference_values() {
    let out = cvtrust(&["rescale", "--kind", "heterodyne", "--eta-d", "0.7", "--two-nu", "1e-3"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["r_squared"].as_f64().unwrap(), 1.0005);
    assert!(rel(v["eta_e"].as_f64().unwrap(), 0.7 / 1.0005) <= 1e-15);
    assert_eq!(v["kind"], "heterodyne");
}

#[test]
fn rescale_noiseless_and_limit() {
    let out = cvtrust(&["rescale", "--kind", "homodyne", "--nu", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["r"].as_f64().unwrap(), 1.0);

    let out = cvtrust(&["rescale", "--kind", "homodyne", "--nu", "5e-4", "--limit"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!(rel(v["eta_e"].as_f64().unwrap(), 1.0 / 1.001) <= 1e-15);
    assert!(v["nbar"].is_null());

    let out = cvtrust(&["rescale", "--kind", "homodyne", "--eta-d", "0.5", "--nbar", "1"]);
    assert_eq!(stdout_json(&out)["r_squared"].as_f64().unwrap(), 2.0);
}

#[test]
fn rescale_usage_errors() {
    for args in [
        &["rescale", "--kind", "homodyne", "--nu", "1e-3", "--two-nu", "2e-3"][..],
        &["rescale", "--kind", "homodyne", "--nu", "1e-3"],
        &["rescale", "--kind", "homodyne", "--eta-d", "1.2", "--nu", "0"],
        &["rescale", "--kind", "photodiode", "--nu", "0"],
        &["rescale", "--kind", "homodyne", "--nu", "0", "--bogus"],
        &["rescale", "--kind", "homodyne"],
    ] {
        let out = cvtrust(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn verify_default_grid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cvtrust(&["verify", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["cells"], 1024);
    assert_eq!(summary["pass"], true);

    let csv = std::fs::read_to_string(dir.path().join("verify_report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha_re,alpha_im,kind,eta_d,nbar,mean_gap,var_gap,ks_stat,pass"
    );
    assert_eq!(lines.count(), 1024);
    let report = read_json(&dir.path().join("verify_report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["mode"], "analytic");
}

#[test]
fn verify_sabotage_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cvtrust(&["verify", "--sabotage", "skip-rescale", "--nu", "1e-2", "--out-dir", d]);
    assert_eq!(code(&out), 1);
    let report = read_json(&dir.path().join("verify_report.json"));
    assert_eq!(report["summary"]["pass"], false);
    assert!(report["config"]["specs"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| (s["nbar"].as_f64().unwrap() * s["loss"].as_f64().unwrap() - 1e-2).abs() < 1e-15));

    let out = cvtrust(&["verify", "--sabotage", "wrong-r", "--out-dir", d]);
    assert_eq!(code(&out), 1);
    let out = cvtrust(&["verify", "--sabotage", "wrong-r", "--wrong-r-factor", "0.5", "--out-dir", d]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cvtrust(&["verify", "--mode", "mc", "--mc-samples", "0", "--out-dir", d]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mc_samples"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"config": {}}"#).unwrap();
    let out = cvtrust(&["verify", "--config", bad.to_str().unwrap(), "--out-dir", d]);
    assert_eq!(code(&out), 2);
    let out = cvtrust(&["verify", "--config", "/nonexistent/cfg.json", "--out-dir", d]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_monte_carlo_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cvtrust(&["verify", "--mode", "mc", "--mc-samples", "20000", "--seed", "3", "--out-dir", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("verify_report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
    assert!(csv.lines().skip(1).all(|l| !l.split(',').nth(7).unwrap().is_empty()));
}

#[test]
fn verify_report_round_trips_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = cvtrust(&[
        "verify", "--mode", "mc", "--mc-samples", "10000", "--seed", "11", "--eta-d", "0.9",
        "--out-dir", a.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let echo = a.join("verify_report.json");
    let out = cvtrust(&["verify", "--config", echo.to_str().unwrap(), "--out-dir", b.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["verify_report.json", "verify_report.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }

    // explicit flags override the file
    let c = dir.path().join("c");
    let out = cvtrust(&[
        "verify", "--config", echo.to_str().unwrap(), "--seed", "12", "--out-dir", c.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(read_json(&c.join("verify_report.json"))["config"]["seed"], 12);
}

fn scan_rows(dir: &Path) -> Vec<Vec<String>> {
    let csv = std::fs::read_to_string(dir.join("scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "loss_dB,scenario,t_eff,xi_eff,rate,status");
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn scan_heterodyne_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = cvtrust(&[
        "scan", "--protocol", "heterodyne", "--eta-d", "0.7", "--two-nu", "1e-3", "--xi0", "1e-3",
        "--loss-db", "0:40:1", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = scan_rows(dir.path());
    assert_eq!(rows.len(), 123);
    let rate = |scenario: &str, i: usize| -> f64 {
        rows.iter().filter(|r| r[1] == scenario).nth(i).unwrap()[4].parse().unwrap()
    };
    for i in 0..41 {
        assert!(rate("ideal", i) >= rate("trusted", i));
        assert!(rate("trusted", i) >= rate("untrusted", i));
    }
    assert!(rows.iter().all(|r| r[5] == "ok"));
    let doc = read_json(&dir.path().join("scan.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["config"]["protocol"], "all-heterodyne");
    assert_eq!(doc["metadata"]["eps_sec"].as_f64().unwrap(), 2f64.powi(-50));
    assert_eq!(doc["metadata"]["pulses"].as_f64().unwrap(), 1e12);
}

#[test]
fn scan_single_scenario_and_hybrid_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = cvtrust(&["scan", "--scenarios", "trusted", "--loss-db", "0:10:2", "--out-dir", d]);
    assert_eq!(code(&out), 0);
    let rows = scan_rows(dir.path());
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[1] == "trusted"));

    let out = cvtrust(&["scan", "--protocol", "hybrid", "--eta-d", "0.7", "--two-nu", "1e-3", "--out-dir", d]);
    assert_eq!(code(&out), 0);
    let eta_e_min = stdout_json(&out)["eta_e_min"].as_f64().unwrap();
    assert!(rel(eta_e_min, 0.7 / 1.001) <= 1e-15);
    assert_eq!(read_json(&dir.path().join("scan.json"))["metadata"]["eta_e_min"].as_f64().unwrap(), eta_e_min);
}

#[test]
fn scan_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for args in [
        &["scan", "--loss-db", "0:40", "--out-dir", d][..],
        &["scan", "--loss-db", "10:0:1", "--out-dir", d],
        &["scan", "--scenarios", "paranoid", "--out-dir", d],
        &["scan", "--rate", "unknown", "--out-dir", d],
        &["scan", "--xi0", "-1", "--out-dir", d],
    ] {
        assert_eq!(code(&cvtrust(args)), 2, "{args:?}");
    }
}

#[test]
fn scan_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = cvtrust(&["scan", "--protocol", "hybrid", "--loss-db", "0:20:0.5", "--out-dir", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let out = cvtrust(&[
        "scan", "--config", a.join("scan.json").to_str().unwrap(), "--out-dir", b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["scan.json", "scan.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cvtrust"))
        .args(["scan", "--loss-db", "0:2:1"])
        .env("CVTRUST_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("scan.csv").exists());
    assert!(dir.path().join("scan.json").exists());
    // no stray temporary files
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn calibrate_from_variance() {
    let out = cvtrust(&["calibrate", "--kind", "homodyne", "--vacuum-variance", "0.25025"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!(rel(v["nu"].as_f64().unwrap(), 5e-4) < 1e-12);
    assert!(v["samples"].is_null());

    let out = cvtrust(&["calibrate", "--kind", "homodyne", "--vacuum-variance", "0.25"]);
    assert_eq!(stdout_json(&out)["nu"].as_f64().unwrap(), 0.0);

    let out = cvtrust(&["calibrate", "--kind", "heterodyne", "--vacuum-variance", "0.5005"]);
    assert!(rel(stdout_json(&out)["nu"].as_f64().unwrap(), 1e-3) < 1e-12);

    for kind in ["homodyne", "heterodyne"] {
        let out = cvtrust(&["calibrate", "--kind", kind, "--vacuum-variance", "0.2"]);
        assert_eq!(code(&out), 1);
    }
    assert_eq!(code(&cvtrust(&["calibrate", "--kind", "homodyne"])), 2);
}

#[test]
fn calibrate_from_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vacuum.txt");
    let density = OutcomeDensity::RealLine {
        mean: 0.0,
        variance: (1.0 + 1e-3) / 4.0,
    };
    let n = 1_000_000;
    let samples = sample_outcomes(&density, n, 2024, 0).unwrap();
    let mut text = String::from("# homodyne vacuum record\n");
    for x in samples.component(0) {
        text.push_str(&format!("{x:e}\n"));
    }
    std::fs::write(&path, text).unwrap();

    let out = cvtrust(&["calibrate", "--kind", "homodyne", "--samples", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["samples"], n);
    let nu = v["nu"].as_f64().unwrap();
    // ν = (4·var − 1)/2 has standard error 2·var·√(2/(n − 1))
    let se = 2.0 * 0.25025 * (2.0 / (n as f64 - 1.0)).sqrt();
    assert!((nu - 5e-4).abs() <= 3.0 * se, "nu {nu}, se {se}");
    assert!(rel(v["standard_error"].as_f64().unwrap(), se) < 1e-2);

    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "0.1 0.2 zero\n").unwrap();
    assert_eq!(code(&cvtrust(&["calibrate", "--kind", "homodyne", "--samples", junk.to_str().unwrap()])), 2);
}
