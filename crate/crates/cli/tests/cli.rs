use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("silt-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn silt(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_silt"))
        .args(args)
        .env_remove("SILT_WORKERS")
        .env("SILT_OUT", out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn constants_table_for_convergent_regime() {
    let dir = scratch("constants");
    let cfg = write_config(&dir, r#"{"version": 1, "k": [1, 0, 0], "m_max": 10}"#);
    let o = silt(&["constants", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("constants.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "m,regime,beta,phi,sigma_sq,cumulative,normalized_limit");
    assert_eq!(rows.len(), 11);
    let sigma: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert!(sigma.iter().all(|&s| s > 0.0));
    assert!(sigma[3..].windows(2).all(|w| w[1] < w[0]));
    let summary = std::fs::read_to_string(dir.join("constants_summary.json")).unwrap();
    assert!(summary.contains("\"converged\""));
}

#[test]
fn constants_reports_divergent_series() {
    let dir = scratch("divergent");
    let cfg = write_config(&dir, r#"{"version": 1, "k": [1, 0], "m_max": 4}"#);
    let o = silt(&["constants", "--config", cfg.to_str().unwrap(), "--format", "json"], &dir);
    assert_eq!(code(&o), 0);
    let summary = std::fs::read_to_string(dir.join("constants_summary.json")).unwrap();
    assert!(summary.contains("LOG_SQUARED") && summary.contains("\"divergent\""));
    let table: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(table.as_array().unwrap().len(), 4);
}

#[test]
fn inadmissible_and_malformed_input_exit_two() {
    let dir = scratch("usage");
    let cfg = write_config(&dir, r#"{"version": 1, "k": [1]}"#);
    assert_eq!(code(&silt(&["constants", "--config", cfg.to_str().unwrap()], &dir)), 2);
    let bad = write_config(&dir, r#"{"version": 1, "k": [1, 0, 0], "unknown": true}"#);
    assert_eq!(code(&silt(&["simulate", "--config", bad.to_str().unwrap()], &dir)), 2);
    std::fs::write(dir.join("broken.json"), "{ not json").unwrap();
    assert_eq!(code(&silt(&["simulate", "--config", dir.join("broken.json").to_str().unwrap()], &dir)), 2);
    assert_eq!(code(&silt(&["verify", "--config", dir.join("missing.json").to_str().unwrap()], &dir)), 2);
    assert_eq!(code(&silt(&["simulate"], &dir)), 2);
    assert_eq!(code(&silt(&["no-such-command"], &dir)), 2);
}

#[test]
fn variance_rows_per_eps() {
    let dir = scratch("variance");
    let cfg = write_config(&dir, r#"{"version": 1, "k": [1, 0, 0], "m": 1, "eps_grid": [0.01, 0.0025]}"#);
    let o = silt(&["variance", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("variance.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][4].is_empty() && !rows[1][4].is_empty());
    assert!(rows.iter().all(|r| r[7] == "ok"));
}

const ETA_CONFIG: &str = r#"{
  "version": 1,
  "k": [1, 0, 0],
  "m": 1,
  "eps": 0.01,
  "replicates": 400,
  "master_seed": 5,
  "eta": {"grid": 4, "u_max": 200.0},
  "sigma_sq_target": TARGET,
  "tolerances": {"variance_rel": 0.25, "ks_p_min": 0.01, "fourth_ratio_rel": 0.25, "se_multiple": 3.0}
}"#;

#[test]
fn eta_tolerance_contract() {
    let dir = scratch("eta");
    // exact variance of the truncated statistic at horizon 100, lag cut 200
    let good = write_config(&dir, &ETA_CONFIG.replace("TARGET", "1.2223"));
    let o = silt(&["eta", "--config", good.to_str().unwrap()], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let wrong = write_config(&dir, &ETA_CONFIG.replace("TARGET", "10.0"));
    assert_eq!(code(&silt(&["eta", "--config", wrong.to_str().unwrap()], &dir)), 1);
}

#[test]
fn sample_files_round_trip() {
    let dir = scratch("roundtrip");
    let cfg = write_config(
        &dir,
        r#"{"version": 1, "k": [1, 0, 0], "eps": 0.05, "n": 64, "replicates": 60, "master_seed": 9}"#,
    );
    let o = silt(&["simulate", "--config", cfg.to_str().unwrap()], &dir);
    assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read(dir.join("report.json")).unwrap();
    let stored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sample_set.json")).unwrap()).unwrap();
    let json_values: Vec<f64> =
        stored["samples"]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let csv = std::fs::read_to_string(dir.join("samples.csv")).unwrap();
    let csv_values: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(json_values.len(), 60);
    assert_eq!(
        json_values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        csv_values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );

    let again = scratch("roundtrip-report");
    let o = silt(&["report", "--input", dir.join("sample_set.json").to_str().unwrap()], &again);
    assert!(matches!(code(&o), 0 | 1));
    assert_eq!(std::fs::read(again.join("report.json")).unwrap(), report);
}

#[test]
fn worker_count_does_not_change_outputs() {
    let cfg_text = r#"{"version": 1, "k": [2, 0], "eps": 0.1, "n": 64, "replicates": 40, "master_seed": 2}"#;
    let mut files = Vec::new();
    for workers in ["1", "3"] {
        let dir = scratch(&format!("workers-{workers}"));
        let cfg = write_config(&dir, cfg_text);
        let o = silt(&["simulate", "--config", cfg.to_str().unwrap(), "--workers", workers], &dir);
        assert!(matches!(code(&o), 0 | 1), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read(dir.join("sample_set.json")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let cfg_text = r#"{"version": 1, "k": [1, 0, 0], "eps": 0.1, "n": 32, "replicates": 30, "master_seed": 1}"#;
    let run = |seed: &str| {
        let dir = scratch(&format!("seed-{seed}"));
        let cfg = write_config(&dir, cfg_text);
        silt(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", seed], &dir);
        std::fs::read_to_string(dir.join("samples.csv")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}
