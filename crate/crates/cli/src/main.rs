//! `ccsp`: run, sweep and re-verify experiments.
//!
//! Exit codes: 0 all checks passed, 1 a verification failed, 2 usage or
//! configuration error, 3 capacity exceeded.

mod config;
mod runner;

use ccsp_core::emulator::{parse_emulator_dump, verify_emulator_edges};
use ccsp_core::graph::load_edge_list;
use ccsp_core::hopset::verify_hopset;
use ccsp_core::{Dist, Error, STRETCH_BUCKETS};
use clap::{Args, Parser, Subcommand};
use config::{load_config, ConfigError, ExperimentConfig, Mode};
use runner::{loglog_slope, run_all, RunRow};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SCHEMA_VERSION: &str = "ccsp-report/1";

#[derive(Parser)]
#[command(name = "ccsp", version, about = "Congested-clique shortest-path experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured algorithm and verify every repetition.
    Run(RunArgs),
    /// Run over the `sweep.n` sizes and fit size against n.
    Sweep(RunArgs),
    /// Re-check a dumped emulator or hopset against a dumped graph.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Edge list of the input graph.
    #[arg(long)]
    graph: PathBuf,
    /// Emulator dump with its `# b_exact= eps=` header.
    #[arg(long, conflicts_with = "hopset")]
    emulator: Option<PathBuf>,
    /// Hopset dump with its `# beta= eps= t=` header.
    #[arg(long)]
    hopset: Option<PathBuf>,
    /// Overrides the stretch from the dump header.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Capacity(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity(_) => Failure::Capacity(e.to_string()),
            Error::Contract(_) | Error::SeedExhausted(_) => Failure::Failed(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(x) = args.seed {
        cfg.seed = x;
    }
    if let Some(x) = args.eps {
        cfg.eps = x;
    }
    if let Some(x) = args.r {
        cfg.r = Some(x);
    }
    if let Some(x) = args.mode {
        cfg.mode = Some(x);
    }
    if let Some(x) = args.repetitions {
        cfg.repetitions = x;
    }
    if let Some(x) = &args.report {
        cfg.output.report = Some(x.clone());
    }
    if let Some(x) = &args.csv {
        cfg.output.csv = Some(x.clone());
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: &'static str,
    code_version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    pass: bool,
    #[serde(flatten)]
    body: T,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn write_first_artifacts(cfg: &ExperimentConfig, first: &RunRow) -> Result<(), Failure> {
    if let (Some(p), Some(d)) = (&cfg.output.dump, &first.dump) {
        write_out(Some(p), d)?;
    }
    if let Some(p) = &cfg.output.graph {
        write_out(Some(p), &first.graph_text)?;
    }
    if let Some(p) = &cfg.output.ledger {
        write_out(Some(p), &first.ledger_csv)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<bool, Failure> {
    let cfg = resolve(args)?;
    if cfg.repetitions == 0 {
        return Err(Failure::Usage("invalid parameter `repetitions`: must be at least 1".into()));
    }
    let rows = run_all(&cfg, true)?;
    let pass = rows.iter().all(|r| r.pass);
    write_first_artifacts(&cfg, &rows[0])?;
    if let Some(p) = &cfg.output.csv {
        let mut s = String::from("repetition,seed,bucket_lo,bucket_hi,count\n");
        for r in &rows {
            for (b, c) in r.stretch_histogram.iter().flatten().enumerate() {
                let lo = 1.0 + 0.05 * b as f64;
                let hi = if b + 1 == STRETCH_BUCKETS { "inf".to_string() } else { format!("{:.2}", lo + 0.05) };
                let _ = writeln!(s, "{},{},{lo:.2},{hi},{c}", r.repetition, r.seed);
            }
        }
        write_out(Some(p), &s)?;
    }
    let report = Report { schema_version: SCHEMA_VERSION, code_version: env!("CARGO_PKG_VERSION"), command: "run", config: &cfg, pass, body: json!({ "runs": rows }) };
    write_out(cfg.output.report.as_deref(), &to_json(&report))?;
    eprintln!("{}: {} repetition(s), {}", cfg.graph.label(), rows.len(), if pass { "pass" } else { "FAIL" });
    Ok(pass)
}

fn cmd_sweep(args: &RunArgs) -> Result<bool, Failure> {
    let cfg = resolve(args)?;
    if cfg.sweep.n.is_empty() {
        return Err(Failure::Usage("invalid parameter `sweep.n`: the size list is empty".into()));
    }
    if cfg.repetitions == 0 {
        return Err(Failure::Usage("invalid parameter `repetitions`: must be at least 1".into()));
    }
    let mut points = Vec::new();
    let mut pass = true;
    for &n in &cfg.sweep.n {
        let mut c = cfg.clone();
        c.graph = cfg.graph.with_n(n)?;
        c.softhit.n = if cfg.algorithm == config::Algorithm::Softhit { n } else { cfg.softhit.n };
        let rows = run_all(&c, cfg.sweep.verify)?;
        pass &= rows.iter().all(|r| r.pass);
        let k = rows.len() as f64;
        let mean_size = rows.iter().filter_map(|r| r.size).sum::<f64>() / k;
        let mean_rounds = rows.iter().map(|r| r.rounds_total).sum::<f64>() / k;
        points.push((n, rows.len(), mean_size, mean_rounds, rows.iter().all(|r| r.pass)));
    }
    let fit: Vec<(f64, f64)> = points.iter().filter(|p| p.2 > 0.0).map(|p| (p.0 as f64, p.2)).collect();
    let slope = loglog_slope(&fit);
    let r = cfg.r.unwrap_or(2);
    let exponent = 1.0 + 1.0 / 2f64.powi(r as i32);
    let emulator = cfg.algorithm == config::Algorithm::Emulator;
    let slope_text = slope.map_or("null".to_string(), |s| format!("{s}"));
    let mut csv = String::from("n,repetitions,mean_size,mean_rounds,size_constant,slope\n");
    let mut series = Vec::new();
    for &(n, reps, size, rounds, ok) in &points {
        let constant = emulator.then(|| size / (r as f64 * (n as f64).powf(exponent)));
        let c_text = constant.map_or("null".to_string(), |c| format!("{c}"));
        let _ = writeln!(csv, "{n},{reps},{size},{rounds},{c_text},{slope_text}");
        series.push(json!({"n": n, "repetitions": reps, "mean_size": size, "mean_rounds": rounds, "size_constant": constant, "pass": ok}));
    }
    if let Some(p) = &cfg.output.csv {
        write_out(Some(p), &csv)?;
    }
    let body = json!({ "series": series, "slope": slope, "expected_slope": emulator.then_some(exponent) });
    let report = Report { schema_version: SCHEMA_VERSION, code_version: env!("CARGO_PKG_VERSION"), command: "sweep", config: &cfg, pass, body };
    write_out(cfg.output.report.as_deref(), &to_json(&report))?;
    eprintln!("sweep over {} sizes, slope {slope_text}", points.len());
    Ok(pass)
}

fn header_value(text: &str, key: &str) -> Option<f64> {
    let line = text.lines().find(|l| l.trim_start().starts_with('#'))?;
    line.trim_start_matches('#').split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let (g, _) = load_edge_list(&args.graph)?;
    let (kind, body): (&str, Value) = if let Some(path) = &args.emulator {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let dump = parse_emulator_dump(&text)?;
        if let Some(n) = dump.n {
            if n != g.n() {
                return Err(Failure::Usage(format!("emulator is for n = {n}, graph has n = {}", g.n())));
            }
        }
        let edges: Vec<(u32, u32, Dist)> = dump.edges.iter().map(|e| (e.u, e.v, e.w)).collect();
        if edges.iter().any(|e| e.0 as usize >= g.n() || e.1 as usize >= g.n()) {
            return Err(Failure::Usage("emulator edge endpoint outside the graph".into()));
        }
        let r = dump.edges.iter().map(|e| e.level as usize).max().unwrap_or(2).max(2);
        let rep = verify_emulator_edges(&g, &edges, args.eps.unwrap_or(dump.eps), dump.b_exact, r)?;
        ("emulator", serde_json::to_value(rep).expect("report serializes"))
    } else if let Some(path) = &args.hopset {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let (beta, eps, t) = match (header_value(&text, "beta"), header_value(&text, "eps"), header_value(&text, "t")) {
            (Some(b), Some(e), Some(t)) => (b as u64, args.eps.unwrap_or(e), t as u64),
            _ => return Err(Failure::Usage(format!("{}: missing `# beta= eps= t=` header", path.display()))),
        };
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#')) {
            let f: Vec<u32> = line.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| Failure::Usage(format!("{}:{}: bad edge `{line}`", path.display(), i + 1)))?;
            match f[..] {
                [u, v, w] if (u as usize) < g.n() && (v as usize) < g.n() => edges.push((u, v, w)),
                _ => return Err(Failure::Usage(format!("{}:{}: expected `u v w` inside the graph", path.display(), i + 1))),
            }
        }
        let rep = verify_hopset(&g, &edges, beta, eps, t)?;
        ("hopset", json!({"pairs_checked": rep.pairs_checked, "violations": rep.violations, "worst_stretch": rep.worst_stretch, "ok": rep.ok()}))
    } else {
        return Err(Failure::Usage("pass --emulator or --hopset".into()));
    };
    let pass = match kind {
        "emulator" => body["lower_violations"] == 0 && body["upper_violations"] == 0,
        _ => body["ok"] == true,
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "code_version": env!("CARGO_PKG_VERSION"),
        "command": "verify",
        "artifact": kind,
        "pass": pass,
        "report": body,
    });
    write_out(args.report.as_deref(), &to_json(&report))?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Capacity(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
