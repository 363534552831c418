//! Executes one configured experiment and collects report rows.

use crate::config::{Algorithm, ExperimentConfig, Mode};
use ccsp_core::apps::{apsp_2eps, apsp_near_additive, mssp, verify_estimates, AppOptions, AppOutcome};
use ccsp_core::emulator::{build_emulator_with, verify_emulator, EmulatorMode};
use ccsp_core::graph::{bfs_ball, generate, Graph};
use ccsp_core::hopset::{build_bounded_hopset, verify_hopset};
use ccsp_core::ledger::RoundLedger;
use ccsp_core::minplus::k_nearest_bounded;
use ccsp_core::rng::SeedStream;
use ccsp_core::softhit::{derandomize_soft_hitting, random_soft_instance, verify_soft_hitting, SoftHitInstance};
use ccsp_core::{Dist, Error, Randomness, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// One repetition's results.
#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub repetition: usize,
    pub seed: u64,
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub pass: bool,
    pub metrics: BTreeMap<String, Value>,
    pub rounds_total: f64,
    pub rounds_by_primitive: BTreeMap<String, f64>,
    #[serde(skip)]
    pub size: Option<f64>,
    #[serde(skip)]
    pub stretch_histogram: Option<Vec<usize>>,
    #[serde(skip)]
    pub dump: Option<String>,
    #[serde(skip)]
    pub graph_text: String,
    #[serde(skip)]
    pub ledger_csv: String,
}

fn randomness(mode: Option<Mode>) -> Result<Randomness> {
    match mode {
        None | Some(Mode::Randomized) => Ok(Randomness::Randomized),
        Some(Mode::Deterministic) => Ok(Randomness::Deterministic),
        Some(m) => Err(Error::param("mode", format!("{m:?} applies only to the emulator; use randomized or deterministic"))),
    }
}

fn emulator_mode(mode: Option<Mode>) -> EmulatorMode {
    match mode {
        Some(Mode::Ideal) => EmulatorMode::Ideal,
        None | Some(Mode::Clique) | Some(Mode::Randomized) => EmulatorMode::Clique,
        Some(Mode::CliqueWhp) => EmulatorMode::CliqueWhp,
        Some(Mode::Deterministic) => EmulatorMode::Deterministic,
    }
}

fn check_cap(cfg: &ExperimentConfig, n: usize) -> Result<()> {
    if n > cfg.oracle_cap {
        Err(Error::Capacity(format!("verification needs n <= oracle_cap = {}, got n = {n}", cfg.oracle_cap)))
    } else {
        Ok(())
    }
}

struct Partial {
    pass: bool,
    metrics: BTreeMap<String, Value>,
    size: Option<f64>,
    stretch_histogram: Option<Vec<usize>>,
    dump: Option<String>,
}

impl Partial {
    fn new(pass: bool) -> Self {
        Partial { pass, metrics: BTreeMap::new(), size: None, stretch_histogram: None, dump: None }
    }

    fn put(&mut self, key: &str, v: impl Serialize) {
        self.metrics.insert(key.to_string(), serde_json::to_value(v).expect("metric serializes"));
    }
}

/// Runs every repetition, spread over the available cores. Rows come back in
/// repetition order whatever order the threads finish in.
pub fn run_all(cfg: &ExperimentConfig, verify: bool) -> Result<Vec<RunRow>> {
    let reps = cfg.repetitions;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).clamp(1, reps.max(1));
    let mut out: Vec<Option<Result<RunRow>>> = (0..reps).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| s.spawn(move || (w..reps).step_by(workers).map(|i| (i, run_once(cfg, i, verify))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("repetition thread panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("every repetition ran")).collect()
}

/// Runs repetition `rep`; `verify` is false only for unverified sweeps.
pub fn run_once(cfg: &ExperimentConfig, rep: usize, verify: bool) -> Result<RunRow> {
    cfg.cost_model.validate()?;
    if cfg.repetitions == 0 {
        return Err(Error::param("repetitions", "must be at least 1"));
    }
    let seed = cfg.seed.wrapping_add(rep as u64);
    let stream = SeedStream::new(seed);
    let (g, label) = if cfg.algorithm == Algorithm::Softhit {
        (Graph::empty(0), "none".to_string())
    } else {
        (generate(&cfg.graph, seed)?, cfg.graph.label())
    };
    let mut ledger = RoundLedger::new(g.n().max(cfg.softhit.n), cfg.cost_model.clone());
    if verify && cfg.algorithm != Algorithm::Softhit {
        check_cap(cfg, g.n())?;
    }
    let part = match cfg.algorithm {
        Algorithm::Emulator => run_emulator(cfg, &g, &stream, &mut ledger, verify)?,
        Algorithm::Hopset => run_hopset(cfg, &g, &stream, &mut ledger, verify)?,
        Algorithm::Knearest => run_knearest(cfg, &g, &mut ledger, verify)?,
        Algorithm::Softhit => run_softhit(cfg, seed, &stream, &mut ledger)?,
        Algorithm::ApspAdditive | Algorithm::Mssp | Algorithm::Apsp2Eps => run_app(cfg, &g, &stream, &mut ledger, verify)?,
    };
    Ok(RunRow {
        repetition: rep,
        seed,
        graph: label,
        n: g.n(),
        m: g.m(),
        pass: part.pass,
        metrics: part.metrics,
        rounds_total: ledger.total(),
        rounds_by_primitive: ledger.by_primitive(),
        size: part.size,
        stretch_histogram: part.stretch_histogram,
        dump: part.dump,
        graph_text: g.to_edge_list(),
        ledger_csv: ledger.to_csv(),
    })
}

fn run_emulator(cfg: &ExperimentConfig, g: &Graph, stream: &SeedStream, ledger: &mut RoundLedger, verify: bool) -> Result<Partial> {
    let mode = emulator_mode(cfg.mode);
    let r = cfg.r.unwrap_or(2);
    let h = build_emulator_with(g, cfg.eps, r, mode, &cfg.emulator, stream, ledger)?;
    let mut p = Partial::new(true);
    p.put("mode", mode);
    p.put("r", r);
    p.put("edges", h.edges.len());
    p.put("size_ratio", h.size_ratio());
    p.put("b_exact", h.b_exact());
    p.put("level_sizes", h.levels.sizes());
    p.put("sr_misses", h.sr_misses);
    p.put("promoted", h.promoted.len());
    p.put("warnings", &h.warnings);
    if !h.level_checks.is_empty() {
        p.put("level_checks", &h.level_checks);
    }
    if let Some(run) = h.run_index {
        p.put("run_index", run);
    }
    if verify {
        let rep = verify_emulator(g, &h, cfg.eps)?;
        p.pass = rep.ok();
        p.put("stretch_ok", rep.ok());
        p.put("pairs_checked", rep.pairs_checked);
        p.put("lower_violations", rep.lower_violations);
        p.put("upper_violations", rep.upper_violations);
        p.put("max_multiplicative", rep.max_multiplicative);
        p.put("max_additive", rep.max_additive);
        p.put("violation_examples", &rep.examples);
        p.stretch_histogram = Some(rep.stretch_histogram);
    }
    p.size = Some(h.edges.len() as f64);
    p.dump = Some(h.to_text());
    Ok(p)
}

fn run_hopset(cfg: &ExperimentConfig, g: &Graph, stream: &SeedStream, ledger: &mut RoundLedger, verify: bool) -> Result<Partial> {
    let mode = randomness(cfg.mode)?;
    let t = cfg.hopset.t;
    let h = build_bounded_hopset(g, cfg.eps, t, mode, stream, ledger)?;
    let mut p = Partial::new(true);
    p.put("t", t);
    p.put("beta", h.beta());
    p.put("edges", h.edges.len());
    p.put("size_constant", h.size_constant());
    p.put("pivots", h.a1.len());
    p.put("pivot_misses", h.missed.len());
    if verify {
        let rep = verify_hopset(g, &h.overlay(), h.beta(), cfg.eps, t)?;
        p.pass = rep.ok();
        p.put("hopset_ok", rep.ok());
        p.put("pairs_checked", rep.pairs_checked);
        p.put("violations", rep.violations);
        p.put("worst_stretch", rep.worst_stretch);
    }
    p.size = Some(h.edges.len() as f64);
    p.dump = Some(format!("# beta={} eps={} t={}\n{}", h.beta(), cfg.eps, t, h.to_text()));
    Ok(p)
}

fn run_knearest(cfg: &ExperimentConfig, g: &Graph, ledger: &mut RoundLedger, verify: bool) -> Result<Partial> {
    let (k, d) = (cfg.knearest.k, cfg.knearest.d);
    let table = k_nearest_bounded(g, k, d, ledger)?;
    let mut p = Partial::new(true);
    p.put("k", k);
    p.put("d", d);
    p.put("density", table.density());
    if verify {
        let radius = d.min(g.n() as u64) as Dist;
        let mismatches: Vec<usize> = (0..g.n())
            .filter(|&v| {
                let mut want = bfs_ball(g, v, radius);
                want.truncate(k);
                table.row(v) != want.as_slice()
            })
            .collect();
        p.pass = mismatches.is_empty();
        p.put("oracle_equal", mismatches.is_empty());
        p.put("mismatched_vertices", mismatches.iter().take(20).collect::<Vec<_>>());
    }
    p.size = Some(table.density() * g.n() as f64);
    Ok(p)
}

fn run_softhit(cfg: &ExperimentConfig, seed: u64, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<Partial> {
    let s = &cfg.softhit;
    let inst = match &s.instance {
        Some(path) => SoftHitInstance::from_json(&std::fs::read_to_string(path)?)?,
        None => random_soft_instance(s.n, s.delta, s.holders, s.extra, seed)?,
    };
    let out = derandomize_soft_hitting(&inst, &s.hash, stream, ledger)?;
    let rep = verify_soft_hitting(&inst, &out.z, s.c_size, s.c_mass);
    let mut p = Partial::new(rep.size_ok && rep.mass_ok);
    p.put("N", inst.n);
    p.put("Delta", inst.delta);
    p.put("holders", inst.holders.len());
    p.put("ell", out.ell);
    p.put("cost", out.cost);
    p.put("root_expectation", out.root_expectation);
    p.put("cost_within_expectation", out.cost <= out.root_expectation * (1.0 + 1e-12));
    p.put("verify", &rep);
    p.size = Some(out.z.len() as f64);
    Ok(p)
}

fn evenly_spaced(n: usize, count: usize) -> Vec<u32> {
    let count = count.min(n);
    (0..count).map(|i| (i * n / count.max(1)) as u32).collect()
}

fn run_app(cfg: &ExperimentConfig, g: &Graph, stream: &SeedStream, ledger: &mut RoundLedger, verify: bool) -> Result<Partial> {
    // Pipelines always take the best available run instead of failing.
    let mut opts = AppOptions { mode: randomness(cfg.mode)?, r: cfg.r, emulator: cfg.emulator.clone(), ..AppOptions::default() };
    opts.emulator.whp_strict = false;
    if let Some(c) = cfg.mssp.source_cap {
        opts.source_cap = c;
    }
    let n = g.n();
    let (out, mult, add): (AppOutcome, f64, Option<f64>) = match cfg.algorithm {
        Algorithm::ApspAdditive => {
            let out = apsp_near_additive(g, cfg.eps, &opts, stream, ledger)?;
            let b = out.b_exact;
            (out, 1.0 + cfg.eps, Some(b))
        }
        Algorithm::Mssp => {
            let count = cfg.mssp.sources.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize);
            (mssp(g, &evenly_spaced(n, count), cfg.eps, &opts, stream, ledger)?, 1.0 + cfg.eps, None)
        }
        _ => (apsp_2eps(g, cfg.eps, &opts, stream, ledger)?, 2.0 + cfg.eps, None),
    };
    let mut p = Partial::new(true);
    p.put("r", out.r);
    p.put("b_exact", out.b_exact);
    p.put("t", out.t);
    p.put("emulator_edges", out.emulator_edges);
    p.put("sources", out.table.rows.len());
    p.put("warnings", &out.warnings);
    let hits: Vec<Value> = out.hitting.iter().map(|h| json!({"set": h.name, "holders": h.holders, "size": h.size, "misses": h.misses})).collect();
    if !hits.is_empty() {
        p.put("hitting_sets", hits);
    }
    if verify {
        let rep = verify_estimates(g, &out.table, mult, add.unwrap_or(0.0))?;
        p.pass = rep.ok();
        p.put("stretch_ok", rep.ok());
        p.put("pairs_checked", rep.pairs_checked);
        p.put("lower_violations", rep.lower_violations);
        p.put("upper_violations", rep.upper_violations);
        p.put("max_multiplicative", rep.max_multiplicative);
        p.put("mean_multiplicative", rep.mean_multiplicative);
        p.put("max_additive", rep.max_additive);
        p.put("worst_pair", &rep.worst);
        p.put("phase_histogram", &rep.histogram);
        p.put("violation_examples", &rep.examples);
        p.stretch_histogram = Some(rep.stretch_histogram);
    }
    p.size = Some(out.emulator_edges as f64);
    p.dump = Some(out.table.to_csv());
    Ok(p)
}

/// Least-squares slope of `ln y` against `ln x`; `None` below two points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit() {
        assert_eq!(loglog_slope(&[(2.0, 3.0)]), None);
        let pts: Vec<(f64, f64)> = [512.0, 1024.0, 2048.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(1.25))).collect();
        assert!((loglog_slope(&pts).unwrap() - 1.25).abs() < 1e-9);
    }

    #[test]
    fn sources_spread() {
        assert_eq!(evenly_spaced(10, 3), vec![0, 3, 6]);
        assert_eq!(evenly_spaced(2, 5), vec![0, 1]);
    }
}
