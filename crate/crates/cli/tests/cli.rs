use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn ccsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccsp")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_report(dir: &Path, config: &str, extra: &[&str]) -> (i32, Value) {
    let cfg = write(dir, "cfg.yaml", config);
    let report = dir.join("report.json");
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--report", report.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = ccsp(&args);
    let code = out.status.code().unwrap();
    let json = std::fs::read_to_string(&report).map(|t| serde_json::from_str(&t).unwrap()).unwrap_or(Value::Null);
    (code, json)
}

#[test]
fn knearest_on_a_path_matches_the_oracle() {
    let dir = TempDir::new().unwrap();
    let (code, rep) = run_report(dir.path(), "graph: {kind: path, n: 16}\nalgorithm: knearest\nknearest: {k: 2, d: 4}\n", &[]);
    assert_eq!(code, 0);
    assert_eq!(rep["schema_version"], "ccsp-report/1");
    assert_eq!(rep["code_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(rep["config"]["knearest"]["k"], 2);
    assert_eq!(rep["runs"][0]["metrics"]["oracle_equal"], true);
}

#[test]
fn twenty_emulator_repetitions_all_pass() {
    let dir = TempDir::new().unwrap();
    let cfg = "graph: {kind: gnp, n: 120, p: 0.04}\nalgorithm: emulator\neps: 0.5\nr: 2\nrepetitions: 20\n";
    let (code, rep) = run_report(dir.path(), cfg, &[]);
    assert_eq!(code, 0);
    let runs = rep["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 20);
    for (i, run) in runs.iter().enumerate() {
        assert_eq!(run["repetition"], i);
        assert_eq!(run["metrics"]["stretch_ok"], true);
    }
}

#[test]
fn bad_eps_is_a_usage_error_naming_the_parameter() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.yaml", "graph: {kind: path, n: 16}\nalgorithm: emulator\n");
    let out = ccsp(&["run", "--config", cfg.to_str().unwrap(), "--eps", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps"));
}

#[test]
fn unknown_config_key_is_a_usage_error_with_location() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.yaml", "graph: {kind: path, n: 16}\nalgorithm: knearest\nbogus_key: 1\n");
    let out = ccsp(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus_key") && err.contains("line 3"), "{err}");
}

#[test]
fn oracle_cap_is_a_capacity_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.yaml", "graph: {kind: cycle, n: 300}\nalgorithm: emulator\noracle_cap: 100\n");
    let out = ccsp(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reports_are_byte_identical_for_the_same_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.yaml", "graph: {kind: gnp, n: 100, p: 0.05}\nalgorithm: apsp-2eps\nrepetitions: 3\nseed: 9\n");
    // Same output path both times: the path is part of the embedded config.
    let path = dir.path().join("report.json");
    let mut texts = Vec::new();
    for _ in 0..2 {
        let out = ccsp(&["run", "--config", cfg.to_str().unwrap(), "--report", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        texts.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn histogram_csv_has_a_row_per_bucket() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("h.csv");
    let cfg = "graph: {kind: cycle, n: 64}\nalgorithm: mssp\nrepetitions: 2\n";
    let (code, _) = run_report(dir.path(), cfg, &["--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("repetition,seed,bucket_lo,bucket_hi,count"));
    assert_eq!(lines.count(), 2 * 41);
}

fn sweep(dir: &Path, ns: &str) -> (Output, String) {
    let cfg = write(
        dir,
        "sweep.yaml",
        &format!("graph: {{kind: gnp, n: 512, avg_degree: 8}}\nalgorithm: emulator\nr: 2\nmode: ideal\nrepetitions: 10\nsweep: {{n: {ns}, verify: false}}\n"),
    );
    let csv = dir.join("sweep.csv");
    let out = ccsp(&["sweep", "--config", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap(), "--report", dir.join("s.json").to_str().unwrap()]);
    (out, std::fs::read_to_string(&csv).unwrap_or_default())
}

#[test]
fn sweep_slope_tracks_the_size_exponent() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = sweep(dir.path(), "[512, 1024, 2048]");
    assert_eq!(out.status.code(), Some(0));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,repetitions,mean_size,mean_rounds,size_constant,slope"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let slope: f64 = rows[0][5].parse().unwrap();
    assert!((slope - 1.25).abs() <= 0.15, "slope {slope}");
}

#[test]
fn sweep_edge_cases() {
    let dir = TempDir::new().unwrap();
    let (out, csv) = sweep(dir.path(), "[256]");
    assert_eq!(out.status.code(), Some(0));
    assert!(csv.lines().nth(1).unwrap().ends_with(",null"));
    let (out, _) = sweep(dir.path(), "[]");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_round_trips_dumped_artifacts() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let (graph, emu, hop) = (d.join("g.txt"), d.join("h.txt"), d.join("hop.txt"));
    let cfg = format!(
        "graph: {{kind: gnp, n: 90, p: 0.05}}\nalgorithm: emulator\noutput: {{graph: {}, dump: {}}}\n",
        graph.display(),
        emu.display()
    );
    assert_eq!(run_report(d, &cfg, &[]).0, 0);
    let out = ccsp(&["verify", "--graph", graph.to_str().unwrap(), "--emulator", emu.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["artifact"], "emulator");
    assert_eq!(rep["pass"], true);

    // Dropping every emulator edge must be caught.
    let header: String = std::fs::read_to_string(&emu).unwrap().lines().filter(|l| l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let empty = write(d, "empty.txt", &header);
    let g = std::fs::read_to_string(&graph).unwrap();
    if g.lines().any(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let out = ccsp(&["verify", "--graph", graph.to_str().unwrap(), "--emulator", empty.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1));
    }

    let cfg = format!("graph: {{kind: cycle, n: 40}}\nalgorithm: hopset\nhopset: {{t: 8}}\noutput: {{graph: {}, dump: {}}}\n", graph.display(), hop.display());
    assert_eq!(run_report(d, &cfg, &[]).0, 0);
    let out = ccsp(&["verify", "--graph", graph.to_str().unwrap(), "--hopset", hop.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
