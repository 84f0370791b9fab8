use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rmtopo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmtopo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = rmtopo(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = "master_seed = 11\n[hamiltonian]\nn_sites = 8\nj_prime = 2.0\ndelta = 0.25\n\
[partition]\nn = 2\n[protocol]\nkind = \"T\"\nn_u = 64\nn_m = 32\nexact_reference = true\n";

#[test]
fn ground_state_reports_energy_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    ok(&["--config", cfg.to_str().unwrap(), "ground-state"], dir.path());
    let doc = json(dir.path().join("ground_state.json"));
    assert!(doc["result"]["energy"].as_f64().unwrap() < 0.0);
    assert!(doc["result"]["residual_norm"].as_f64().unwrap() < 1e-6);
    assert_eq!(doc["config"]["hamiltonian"]["n_sites"], 8);
}

#[test]
fn odd_chain_fails_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("n_sites = 8", "n_sites = 7"));
    let o = rmtopo(&["--config", cfg.to_str().unwrap(), "ground-state"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_sites"));
}

#[test]
fn unknown_keys_and_missing_seeds_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("delta = 0.25", "delta = 0.25\ndelat = 1.0"));
    let o = rmtopo(&["--config", cfg.to_str().unwrap(), "ground-state"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("delat"));

    let cfg = write_config(dir.path(), &SMALL.replace("master_seed = 11\n", ""));
    let o = rmtopo(&["--config", cfg.to_str().unwrap(), "invariants", "--sampled"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("master_seed"));
}

#[test]
fn outputs_are_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let read = |sub: &str| std::fs::read(dir.path().join(sub).join("invariants_sampled.json")).unwrap();
    ok(&["--config", cfg, "--jobs", "1", "invariants", "--sampled"], &dir.path().join("a"));
    ok(&["--config", cfg, "--jobs", "3", "invariants", "--sampled"], &dir.path().join("b"));
    ok(&["--config", cfg, "invariants", "--sampled"], &dir.path().join("c"));
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a"), read("c"));
}

#[test]
fn exact_invariant_on_the_shipped_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("example.toml");
    ok(&["--config", cfg.to_str().unwrap(), "invariants", "--exact"], dir.path());
    let doc = json(dir.path().join("invariants_exact.json"));
    let z = doc["result"]["exact"]["normalized"].as_f64().unwrap();
    assert!((-1.05..=1.05).contains(&z), "{z}");
    assert_eq!(doc["result"]["exact"]["kind"], "R");
}

#[test]
fn sampled_invariant_echoes_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    ok(&["--config", cfg.to_str().unwrap(), "--seed", "99", "invariants", "--sampled"], dir.path());
    let doc = json(dir.path().join("invariants_sampled.json"));
    let est = &doc["result"]["sampled"]["normalized"];
    assert_eq!(est["n_u"], 64);
    assert_eq!(est["n_m"], 32);
    assert_eq!(est["master_seed"], 99);
    assert_eq!(doc["master_seed"], 99);
    assert!(est["exact_reference"].as_f64().is_some());
    assert!(doc["result"]["exact"]["normalized"].as_f64().is_some());
}

#[test]
fn exported_campaign_reanalyzes_to_the_same_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    ok(&["--config", cfg, "campaign-export"], dir.path());
    let records = dir.path().join("campaign.jsonl");
    ok(&["--config", cfg, "campaign-analyze", "--records", records.to_str().unwrap()], dir.path());
    ok(&["--config", cfg, "invariants", "--sampled"], dir.path());
    let analyzed = json(dir.path().join("campaign_analysis.json"));
    let direct = json(dir.path().join("invariants_sampled.json"));
    assert_eq!(analyzed["result"]["normalized"]["value"], direct["result"]["sampled"]["normalized"]["value"]);
    assert!(analyzed["result"]["purity_a"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn twirl_check_meets_the_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["twirl-check", "100000"], dir.path());
    let doc = json(dir.path().join("twirl_check.json"));
    for r in doc["result"].as_array().unwrap() {
        assert!(r["distance"].as_f64().unwrap() <= 0.05, "{r}");
    }
    assert_eq!(doc["master_seed"], 0);
}

#[test]
fn fig2d_config_gives_segment_series_and_lambda() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--config", configs().join("fig2d_desk.toml").to_str().unwrap(), "sweep"], dir.path());
    let mut rdr = csv::Reader::from_path(dir.path().join("fig2d_desk.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "n") && headers.iter().any(|h| h == "exact_normalized"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| &r[9] == "T"));
    let doc = json(dir.path().join("fig2d_desk.json"));
    assert_eq!(doc["result"]["lambda"].as_array().unwrap().len(), 7);
}

#[test]
fn fig1c_config_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--config", configs().join("fig1c_desk.toml").to_str().unwrap(), "sweep"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("fig1c_desk.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 72);
    for r in &rows {
        let z: f64 = r[11].parse().unwrap();
        assert!(z.is_finite());
    }
}

#[test]
fn adiabatic_and_scan_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--config", configs().join("fig5_desk.toml").to_str().unwrap(), "adiabatic"], dir.path());
    let doc = json(dir.path().join("fig5_desk.json"));
    assert!(doc["result"]["final_overlap"].as_f64().unwrap() > 0.9);
    ok(&["--config", configs().join("fig3_desk.toml").to_str().unwrap(), "error-scan"], dir.path());
    let rows = std::fs::read_to_string(dir.path().join("fig3_desk.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
}
