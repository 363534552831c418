//! `(1+ε, β)`-emulators.
//!
//! Vertices are sampled into nested levels `V = S_0 ⊇ S_1 ⊇ … ⊇ S_r`. A
//! vertex at top level `i` looks at its ball of radius `δ_i`: if the ball
//! holds a level-`(i+1)` vertex it links to the closest one (dense),
//! otherwise it connects to every level-`i` vertex in the ball (sparse).
//!
//! Four realizations share these rules. `Ideal` reads balls by BFS. `Clique`
//! reads them from a `(k, δ_r)`-nearest table and connects the top level
//! through a bounded hopset. `CliqueWhp` samples many level hierarchies and
//! keeps one satisfying the size and hitting events. `Deterministic` builds
//! the levels with soft hitting sets plus one deterministic hitting set.

use crate::graph::{bfs_from, dijkstra, BfsScratch, Graph, WeightedAdj, WeightedGraphView};
use crate::hopset::build_bounded_hopset;
use crate::ledger::RoundLedger;
use crate::minplus::{k_nearest_bounded, NearestTable};
use crate::primitives::{source_detection, HittingSetInstance};
use crate::rng::SeedStream;
use crate::softhit::{derandomize_soft_hitting, deterministic_hitting_set_auto, size_constant, HashFamilyConfig, SoftHitInstance, SoftHolder};
use crate::{ceil_log2, log_n, Dist, Error, Randomness, Result, INF};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmulatorMode {
    Ideal,
    Clique,
    CliqueWhp,
    Deterministic,
}

/// `δ_i`, `R_i`, `β_i` for `i = 0..=r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recurrences {
    pub delta: Vec<f64>,
    pub big_r: Vec<f64>,
    pub beta: Vec<f64>,
}

/// `R_0 = 0`, `δ_i = ε^{-i} + 2R_i`, `R_{i+1} = R_i + δ_i`,
/// `β_i = 4R_i + 2β_{i-1}`. No range check on `eps0`.
pub fn recurrences(eps0: f64, r: usize) -> Recurrences {
    let mut delta = Vec::with_capacity(r + 1);
    let mut big_r = vec![0.0];
    let mut beta = vec![0.0];
    for i in 0..=r {
        let d = eps0.powi(-(i as i32)) + 2.0 * big_r[i];
        delta.push(d);
        if i < r {
            big_r.push(big_r[i] + d);
        }
        if i > 0 {
            beta.push(4.0 * big_r[i] + 2.0 * beta[i - 1]);
        }
    }
    Recurrences { delta, big_r, beta }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmulatorParams {
    pub n: usize,
    pub r: usize,
    pub eps_user: f64,
    pub eps0: f64,
    /// `p[i]` for `i = 1..=r`; `p[0] = 1`.
    pub p: Vec<f64>,
    pub delta: Vec<f64>,
    pub big_r: Vec<f64>,
    pub beta: Vec<f64>,
    /// `⌈δ_i⌉` capped at `n`, the radius balls are actually read with.
    pub radius: Vec<Dist>,
    /// `⌈δ_r⌉` uncapped, used for nominal parameters and charges.
    pub top_radius: u64,
    /// Stretch of the hopset used for top-level edges.
    pub eps_hopset: f64,
    /// Table size for the heavy/light split.
    pub k: usize,
}

fn ceil_tol(x: f64) -> f64 {
    (x * (1.0 - 1e-12)).ceil()
}

/// Parameters for target stretch `(1 + eps_user, 2β_r)`.
///
/// `ε₀ = eps_user / (80(r−1))`, so the hopset stretch `20ε₀(r−1)` is
/// `eps_user/4` and the final multiplicative stretch is at most `eps_user`.
pub fn compute_params(n: usize, eps_user: f64, r: usize) -> Result<EmulatorParams> {
    if r < 2 {
        return Err(Error::param("r", format!("{r} must be at least 2")));
    }
    if !(eps_user > 0.0 && eps_user < 1.0) {
        return Err(Error::param("eps", format!("{eps_user} must lie in (0, 1)")));
    }
    let eps0 = eps_user / (80.0 * (r - 1) as f64);
    if eps0 >= 0.1 {
        return Err(Error::param("eps", format!("internal eps0 = {eps0} must be below 1/10")));
    }
    let rec = recurrences(eps0, r);
    let nf = n.max(1) as f64;
    let two_r = 2f64.powi(r as i32);
    let mut p = vec![1.0];
    for i in 1..=r {
        let e = if i < r { 2f64.powi(i as i32 - 1) / two_r } else { 1.0 / two_r };
        p.push(nf.powf(-e));
    }
    let radius = rec.delta.iter().map(|&d| ceil_tol(d).min(n as f64) as Dist).collect();
    let top_radius = ceil_tol(rec.delta[r]) as u64;
    let k = (ceil_tol(nf.powf(2.0 / 3.0)) as usize).clamp(1, n.max(1));
    Ok(EmulatorParams {
        n,
        r,
        eps_user,
        eps0,
        p,
        delta: rec.delta,
        big_r: rec.big_r,
        beta: rec.beta,
        radius,
        top_radius,
        eps_hopset: 20.0 * eps0 * (r - 1) as f64,
        k,
    })
}

impl EmulatorParams {
    /// Additive term the verifier uses: `β_r` for exact top-level edges,
    /// `2β_r` when they are approximated through a hopset.
    pub fn b_exact(&self, mode: EmulatorMode) -> f64 {
        match mode {
            EmulatorMode::Ideal => self.beta[self.r],
            _ => 2.0 * self.beta[self.r],
        }
    }
}

/// Top level `i_v` of every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelHierarchy {
    pub r: usize,
    pub top: Vec<u8>,
}

impl LevelHierarchy {
    pub fn contains(&self, v: usize, i: usize) -> bool {
        self.top[v] as usize >= i
    }

    pub fn set(&self, i: usize) -> Vec<u32> {
        (0..self.top.len()).filter(|&v| self.contains(v, i)).map(|v| v as u32).collect()
    }

    /// `|S_i|` for `i = 0..=r`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.r + 1];
        for &t in &self.top {
            for x in s.iter_mut().take(t as usize + 1) {
                *x += 1;
            }
        }
        s
    }
}

/// Bernoulli cascade: `v ∈ S_i` with probability `p_i` given `v ∈ S_{i-1}`.
pub fn sample_levels(p: &[f64], n: usize, stream: &SeedStream, label: &str) -> LevelHierarchy {
    let r = p.len() - 1;
    let mut rng = stream.rng(label);
    let top = (0..n)
        .map(|_| {
            let mut t = 0u8;
            for &pi in &p[1..] {
                if rng.random_bool(pi.clamp(0.0, 1.0)) {
                    t += 1;
                } else {
                    break;
                }
            }
            t
        })
        .collect();
    LevelHierarchy { r, top }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    DenseLink,
    SparseClique,
    SrApprox,
}

impl EdgeRule {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeRule::DenseLink => "dense-link",
            EdgeRule::SparseClique => "sparse-clique",
            EdgeRule::SrApprox => "Sr-approx",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dense-link" => Some(EdgeRule::DenseLink),
            "sparse-clique" => Some(EdgeRule::SparseClique),
            "Sr-approx" => Some(EdgeRule::SrApprox),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmulatorEdge {
    pub u: u32,
    pub v: u32,
    pub w: Dist,
    pub level: u8,
    pub rule: EdgeRule,
}

/// `|S'_{i+1}|` against its bound `|S'_i|·p_{i+1}` in deterministic mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSizeCheck {
    pub level: usize,
    pub prev: usize,
    pub size: usize,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct EmulatorGraph {
    pub n: usize,
    pub mode: EmulatorMode,
    pub params: EmulatorParams,
    pub levels: LevelHierarchy,
    /// Deduplicated by unordered pair, lightest weight kept.
    pub edges: Vec<EmulatorEdge>,
    /// `c_0(v), c_1(v), …` as far as defined.
    pub chains: Vec<Vec<u32>>,
    /// Target of each vertex's dense link, if it is dense.
    pub dense_target: Vec<Option<u32>>,
    /// Heavy vertices whose table missed `S_r` (the w.h.p. event failed).
    pub sr_misses: usize,
    /// Vertices moved into `S_r` because their table held no next-level
    /// vertex.
    pub promoted: Vec<u32>,
    pub level_checks: Vec<LevelSizeCheck>,
    /// Chosen run in `CliqueWhp` mode.
    pub run_index: Option<usize>,
    pub warnings: Vec<String>,
}

impl EmulatorGraph {
    pub fn b_exact(&self) -> f64 {
        self.params.b_exact(self.mode)
    }

    pub fn adjacency(&self) -> WeightedAdj {
        WeightedAdj::from_edges(self.n, self.edges.iter().map(|e| (e.u, e.v, e.w)))
    }

    /// `|E(H)| / (r·n^{1+1/2^r})`.
    pub fn size_ratio(&self) -> f64 {
        size_ratio(self.edges.len(), self.n, self.params.r)
    }

    /// Header `# n= b_exact= eps=` then `u v w level rule` per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("# n={} b_exact={} eps={}\n", self.n, self.b_exact(), self.params.eps_user);
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {} {} {}", e.u, e.v, e.w, e.level, e.rule.as_str());
        }
        s
    }
}

pub fn size_ratio(edges: usize, n: usize, r: usize) -> f64 {
    edges as f64 / (r as f64 * (n.max(1) as f64).powf(1.0 + 1.0 / 2f64.powi(r as i32)))
}

/// A parsed emulator dump.
#[derive(Debug, Clone, PartialEq)]
pub struct EmulatorDump {
    pub n: Option<usize>,
    pub b_exact: f64,
    pub eps: f64,
    pub edges: Vec<EmulatorEdge>,
}

pub fn parse_emulator_dump(text: &str) -> Result<EmulatorDump> {
    let mut dump = EmulatorDump { n: None, b_exact: f64::NAN, eps: f64::NAN, edges: Vec::new() };
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(h) = t.strip_prefix('#') {
            for kv in h.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    match k {
                        "n" => dump.n = Some(v.parse().map_err(|_| err(format!("bad n `{v}`")))?),
                        "b_exact" => dump.b_exact = v.parse().map_err(|_| err(format!("bad b_exact `{v}`")))?,
                        "eps" => dump.eps = v.parse().map_err(|_| err(format!("bad eps `{v}`")))?,
                        _ => {}
                    }
                }
            }
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 5 {
            return Err(err(format!("expected `u v w level rule`, got {} fields", f.len())));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| err(format!("bad number `{s}`")));
        let rule = EdgeRule::parse(f[4]).ok_or_else(|| err(format!("unknown rule `{}`", f[4])))?;
        let level = f[3].parse::<u8>().map_err(|_| err(format!("bad level `{}`", f[3])))?;
        dump.edges.push(EmulatorEdge { u: num(f[0])?, v: num(f[1])?, w: num(f[2])?, level, rule });
    }
    if dump.b_exact.is_nan() || dump.eps.is_nan() {
        return Err(Error::Parse { line: 1, msg: "missing `# b_exact= eps=` header".into() });
    }
    Ok(dump)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmulatorOptions {
    /// Runs sampled in `CliqueWhp` mode: `⌈c·log₂ n⌉`.
    pub whp_run_factor: f64,
    /// Fail with seed exhaustion when no run qualifies; otherwise fall back
    /// to the run with fewest hitting misses, then fewest edges.
    pub whp_strict: bool,
    pub softhit: HashFamilyConfig,
}

impl Default for EmulatorOptions {
    fn default() -> Self {
        EmulatorOptions { whp_run_factor: 4.0, whp_strict: true, softhit: HashFamilyConfig::default() }
    }
}

/// Accumulates edges and per-vertex outcomes of the edge rules.
struct EdgeSink {
    edges: BTreeMap<(u32, u32), (Dist, u8, EdgeRule)>,
    dense_target: Vec<Option<u32>>,
    added: usize,
}

impl EdgeSink {
    fn new(n: usize) -> Self {
        EdgeSink { edges: BTreeMap::new(), dense_target: vec![None; n], added: 0 }
    }

    fn add(&mut self, u: u32, v: u32, w: Dist, level: u8, rule: EdgeRule) {
        if u == v {
            return;
        }
        self.added += 1;
        let key = if u < v { (u, v) } else { (v, u) };
        match self.edges.get(&key) {
            Some(&(old, _, _)) if old <= w => {}
            _ => {
                self.edges.insert(key, (w, level, rule));
            }
        }
    }

    fn into_edges(self) -> (Vec<EmulatorEdge>, Vec<Option<u32>>) {
        let edges = self.edges.into_iter().map(|((u, v), (w, level, rule))| EmulatorEdge { u, v, w, level, rule }).collect();
        (edges, self.dense_target)
    }
}

/// Applies the dense/sparse rule to a ball sorted by `(distance, id)`.
/// Returns false if the ball is only a prefix (heavy) and has no next-level
/// vertex, so the rule cannot be applied.
fn apply_rule(sink: &mut EdgeSink, levels: &LevelHierarchy, v: usize, ball: &[(u32, Dist)], complete: bool) -> bool {
    let i = levels.top[v] as usize;
    if let Some(&(u, d)) = ball.iter().find(|e| levels.contains(e.0 as usize, i + 1)) {
        sink.add(v as u32, u, d, i as u8, EdgeRule::DenseLink);
        sink.dense_target[v] = Some(u);
        return true;
    }
    if !complete {
        return false;
    }
    for &(u, d) in ball {
        if levels.contains(u as usize, i) {
            sink.add(v as u32, u, d, i as u8, EdgeRule::SparseClique);
        }
    }
    true
}

fn chains(levels: &LevelHierarchy, dense_target: &[Option<u32>]) -> Vec<Vec<u32>> {
    (0..levels.top.len())
        .map(|v| {
            let mut chain = vec![v as u32];
            let mut c = v;
            for i in 0..levels.r {
                if levels.top[c] as usize > i {
                    chain.push(c as u32);
                } else if let Some(t) = dense_target[c] {
                    c = t as usize;
                    chain.push(t);
                } else {
                    break;
                }
            }
            chain
        })
        .collect()
}

fn ideal_edges(g: &Graph, params: &EmulatorParams, levels: &LevelHierarchy) -> EdgeSink {
    let n = g.n();
    let r = params.r;
    let mut sink = EdgeSink::new(n);
    let mut bfs = BfsScratch::new(n);
    for v in 0..n {
        let i = levels.top[v] as usize;
        let mut ball: Vec<(u32, Dist)> = Vec::new();
        let mut next: Option<(u32, Dist)> = None;
        bfs.layers(g, v, params.radius[i], |d, layer| {
            if i < r {
                if let Some(&u) = layer.iter().find(|&&u| levels.contains(u as usize, i + 1)) {
                    next = Some((u, d));
                    return false;
                }
            }
            ball.extend(layer.iter().filter(|&&u| levels.contains(u as usize, i)).map(|&u| (u, d)));
            true
        });
        match next {
            Some((u, d)) => {
                sink.add(v as u32, u, d, i as u8, EdgeRule::DenseLink);
                sink.dense_target[v] = Some(u);
            }
            None => {
                for (u, d) in ball {
                    sink.add(v as u32, u, d, i as u8, EdgeRule::SparseClique);
                }
            }
        }
    }
    sink
}

/// Heavy at level `i`: the closed `δ_i`-ball has at least `k` vertices.
fn is_heavy(table: &NearestTable, params: &EmulatorParams, v: usize, i: usize) -> bool {
    !table.covers_ball(v, params.radius[i])
}

struct TableOutcome {
    sink: EdgeSink,
    /// Heavy vertices without a next-level vertex in their table.
    stuck: Vec<u32>,
    sr_misses: usize,
}

/// Edge rules for every vertex below the top level, read from the table.
fn table_edges(table: &NearestTable, params: &EmulatorParams, levels: &LevelHierarchy) -> TableOutcome {
    let n = table.n();
    let r = params.r;
    let mut sink = EdgeSink::new(n);
    let mut stuck = Vec::new();
    let mut sr_misses = 0;
    for v in 0..n {
        let i = levels.top[v] as usize;
        if i == r {
            continue;
        }
        let radius = params.radius[i];
        let row = table.row(v);
        let heavy = is_heavy(table, params, v, i);
        let end = row.partition_point(|e| e.1 <= radius);
        let ball = &row[..end];
        if heavy && !row.iter().any(|e| levels.contains(e.0 as usize, r)) {
            sr_misses += 1;
        }
        if !apply_rule(&mut sink, levels, v, ball, !heavy) {
            stuck.push(v as u32);
        }
    }
    TableOutcome { sink, stuck, sr_misses }
}

/// Top-level edges through a hopset and hop-bounded source detection.
fn top_level_edges(
    g: &Graph,
    params: &EmulatorParams,
    levels: &LevelHierarchy,
    randomness: Randomness,
    stream: &SeedStream,
    ledger: &mut RoundLedger,
    sink: &mut EdgeSink,
) -> Result<()> {
    let r = params.r;
    let top = levels.set(r);
    let hopset = build_bounded_hopset(g, params.eps_hopset, params.top_radius, randomness, &stream.child("emulator/hopset"), ledger)?;
    let gv = WeightedGraphView::new(g, hopset.overlay())?;
    let found = source_detection(&gv, &top, hopset.beta(), ledger)?;
    let limit = (1.0 + params.eps_hopset) * params.delta[r];
    for &a in &top {
        for (b, d) in found.detected(a as usize) {
            if b != a && levels.contains(b as usize, r) && (d as f64) <= limit {
                sink.add(a, b, d, r as u8, EdgeRule::SrApprox);
            }
        }
    }
    Ok(())
}

/// Table-based edge rules, promoting stuck heavy vertices into `S_r` until
/// none remain.
fn table_edges_repaired(table: &NearestTable, params: &EmulatorParams, levels: &mut LevelHierarchy) -> (TableOutcome, Vec<u32>) {
    let mut promoted = Vec::new();
    loop {
        let out = table_edges(table, params, levels);
        if out.stuck.is_empty() {
            return (out, promoted);
        }
        for &v in &out.stuck {
            levels.top[v as usize] = params.r as u8;
            promoted.push(v);
        }
    }
}

/// Builds the emulator with default options.
pub fn build_emulator(g: &Graph, eps_user: f64, r: usize, mode: EmulatorMode, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<EmulatorGraph> {
    build_emulator_with(g, eps_user, r, mode, &EmulatorOptions::default(), stream, ledger)
}

pub fn build_emulator_with(
    g: &Graph,
    eps_user: f64,
    r: usize,
    mode: EmulatorMode,
    opts: &EmulatorOptions,
    stream: &SeedStream,
    ledger: &mut RoundLedger,
) -> Result<EmulatorGraph> {
    let params = compute_params(g.n(), eps_user, r)?;
    ledger.scoped("emulator", |ledger| match mode {
        EmulatorMode::Ideal | EmulatorMode::Clique => {
            let levels = sample_levels(&params.p, g.n(), stream, "emulator/levels");
            build_with_levels(g, params, levels, mode, stream, ledger)
        }
        EmulatorMode::CliqueWhp => build_whp(g, params, opts, stream, ledger),
        EmulatorMode::Deterministic => build_deterministic(g, params, opts, stream, ledger),
    })
}

/// Ideal or clique construction on a given level hierarchy.
pub fn build_with_levels(
    g: &Graph,
    params: EmulatorParams,
    levels: LevelHierarchy,
    mode: EmulatorMode,
    stream: &SeedStream,
    ledger: &mut RoundLedger,
) -> Result<EmulatorGraph> {
    if levels.top.len() != g.n() || levels.r != params.r {
        return Err(Error::Argument("level hierarchy does not match the graph and parameters".into()));
    }
    ledger.charge_flat("level_announce", 1.0);
    match mode {
        EmulatorMode::Ideal => {
            let sink = ideal_edges(g, &params, &levels);
            Ok(finish(g.n(), EmulatorMode::Ideal, params, levels, sink, 0, Vec::new(), Vec::new(), None, Vec::new()))
        }
        EmulatorMode::Clique => {
            let table = k_nearest_bounded(g, params.k, params.top_radius, ledger)?;
            clique_finish(g, &table, params, levels, Randomness::Randomized, EmulatorMode::Clique, None, Vec::new(), Vec::new(), stream, ledger)
        }
        _ => Err(Error::Argument("build_with_levels supports the ideal and clique modes".into())),
    }
}

#[allow(clippy::too_many_arguments)]
fn clique_finish(
    g: &Graph,
    table: &NearestTable,
    params: EmulatorParams,
    mut levels: LevelHierarchy,
    randomness: Randomness,
    mode: EmulatorMode,
    run_index: Option<usize>,
    level_checks: Vec<LevelSizeCheck>,
    mut warnings: Vec<String>,
    stream: &SeedStream,
    ledger: &mut RoundLedger,
) -> Result<EmulatorGraph> {
    let (out, promoted) = table_edges_repaired(table, &params, &mut levels);
    if out.sr_misses > 0 {
        warnings.push(format!("{} heavy vertices have no top-level vertex in their table", out.sr_misses));
    }
    if !promoted.is_empty() {
        warnings.push(format!("{} heavy vertices had no next-level vertex in their table and were promoted to the top level", promoted.len()));
    }
    let mut sink = out.sink;
    top_level_edges(g, &params, &levels, randomness, stream, ledger, &mut sink)?;
    Ok(finish(g.n(), mode, params, levels, sink, out.sr_misses, promoted, level_checks, run_index, warnings))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    n: usize,
    mode: EmulatorMode,
    params: EmulatorParams,
    levels: LevelHierarchy,
    sink: EdgeSink,
    sr_misses: usize,
    promoted: Vec<u32>,
    level_checks: Vec<LevelSizeCheck>,
    run_index: Option<usize>,
    warnings: Vec<String>,
) -> EmulatorGraph {
    let (edges, dense_target) = sink.into_edges();
    let chains = chains(&levels, &dense_target);
    EmulatorGraph { n, mode, params, levels, edges, chains, dense_target, sr_misses, promoted, level_checks, run_index, warnings }
}

/// Per-run statistics of a candidate hierarchy in `CliqueWhp` mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub run: usize,
    /// Edges added by vertices below the top level.
    pub edges: usize,
    pub top_size: usize,
    pub sr_misses: usize,
    pub qualifies: bool,
}

fn build_whp(g: &Graph, params: EmulatorParams, opts: &EmulatorOptions, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<EmulatorGraph> {
    let n = g.n();
    let runs = ((opts.whp_run_factor * log_n(n) as f64).ceil() as usize).max(1);
    let lg = log_n(n) as u64;
    let lglglg = ceil_log2(ceil_log2(lg).max(1) as u64).max(1);
    ledger.charge_flat("level_announce", lglglg as f64);
    let table = k_nearest_bounded(g, params.k, params.top_radius, ledger)?;
    ledger.charge_flat("run_select", 2.0);
    let edge_bound = 4.0 * params.r as f64 * (n.max(1) as f64).powf(1.0 + 1.0 / 2f64.powi(params.r as i32));
    let top_bound = 2.0 * (n as f64).sqrt();
    let mut stats = Vec::with_capacity(runs);
    let mut hierarchies = Vec::with_capacity(runs);
    for j in 0..runs {
        let levels = sample_levels(&params.p, n, stream, &format!("emulator/levels/run{j}"));
        let out = table_edges(&table, &params, &levels);
        let top_size = levels.sizes()[params.r];
        let qualifies = (out.sink.added as f64) <= edge_bound && (top_size as f64) <= top_bound && out.sr_misses == 0;
        stats.push(RunStats { run: j, edges: out.sink.added, top_size, sr_misses: out.sr_misses, qualifies });
        hierarchies.push(levels);
    }
    let mut warnings = Vec::new();
    let chosen = match stats.iter().filter(|s| s.qualifies).min_by_key(|s| (s.edges, s.run)) {
        Some(s) => s.run,
        None if opts.whp_strict => {
            return Err(Error::SeedExhausted(format!("none of {runs} sampled runs satisfies the size and hitting events")));
        }
        None => {
            let s = stats.iter().min_by_key(|s| (s.sr_misses, s.edges, s.run)).expect("at least one run");
            warnings.push(format!("no qualifying run among {runs}; using run {} with {} hitting misses", s.run, s.sr_misses));
            s.run
        }
    };
    let levels = hierarchies.swap_remove(chosen);
    clique_finish(g, &table, params, levels, Randomness::Randomized, EmulatorMode::CliqueWhp, Some(chosen), Vec::new(), warnings, stream, ledger)
}

fn build_deterministic(g: &Graph, params: EmulatorParams, opts: &EmulatorOptions, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<EmulatorGraph> {
    let n = g.n();
    let r = params.r;
    let table = k_nearest_bounded(g, params.k, params.top_radius, ledger)?;
    let c_size = size_constant(opts.softhit.c_prime);
    let mut top = vec![0u8; n];
    let mut current: Vec<u32> = (0..n as u32).collect();
    let mut first_heavy: Vec<Option<usize>> = vec![None; n];
    let mut checks = Vec::new();
    for i in 0..r {
        let mut index = vec![u32::MAX; n];
        for (j, &v) in current.iter().enumerate() {
            index[v as usize] = j as u32;
        }
        let delta = (c_size / params.p[i + 1] - 1e-9).ceil() as usize;
        let mut holders = Vec::new();
        for &v in &current {
            let vu = v as usize;
            if is_heavy(&table, &params, vu, i) {
                first_heavy[vu].get_or_insert(i);
                continue;
            }
            let radius = params.radius[i];
            let t: Vec<u32> = table.row(vu).iter().filter(|e| e.1 <= radius && index[e.0 as usize] != u32::MAX).map(|e| index[e.0 as usize]).collect();
            if t.len() >= delta {
                holders.push(SoftHolder { id: v, set: t });
            }
        }
        let next: Vec<u32> = if holders.is_empty() {
            Vec::new()
        } else {
            let inst = SoftHitInstance::new(current.len(), delta, holders)?;
            let out = ledger.scoped("softhit", |l| derandomize_soft_hitting(&inst, &opts.softhit, &stream.child("emulator/softhit"), l))?;
            out.z.iter().map(|&j| current[j as usize]).collect()
        };
        let bound = current.len() as f64 * params.p[i + 1];
        checks.push(LevelSizeCheck { level: i + 1, prev: current.len(), size: next.len(), bound });
        if next.len() as f64 > bound {
            return Err(Error::Contract(format!("|S'_{}| = {} exceeds |S'_{}|·p = {bound}", i + 1, next.len(), i)));
        }
        for &v in &next {
            top[v as usize] = (i + 1) as u8;
        }
        current = next;
    }
    let holders: Vec<(u32, Vec<u32>)> = (0..n).filter(|&v| first_heavy[v].is_some()).map(|v| (v as u32, table.row(v).iter().map(|e| e.0).collect())).collect();
    if !holders.is_empty() {
        let inst = HittingSetInstance::new(n, params.k, holders)?;
        let (a, _) = deterministic_hitting_set_auto(&inst, crate::hopset::HITTING_C, ledger)?;
        for v in a {
            top[v as usize] = r as u8;
        }
    }
    let levels = LevelHierarchy { r, top };
    ledger.charge_flat("level_announce", 1.0);
    clique_finish(g, &table, params, levels, Randomness::Deterministic, EmulatorMode::Deterministic, None, checks, Vec::new(), stream, ledger)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmulatorReport {
    pub pairs_checked: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// Up to 20 violating pairs `(u, v, d_G, d_H)`.
    pub examples: Vec<(u32, u32, Dist, Dist)>,
    /// Largest `d_H / d_G`.
    pub max_multiplicative: f64,
    /// Largest `d_H − (1+ε)·d_G`.
    pub max_additive: f64,
    pub edges: usize,
    pub size_ratio: f64,
    pub b_exact: f64,
    /// Pair counts per stretch bucket, see [`crate::stretch_bucket`].
    pub stretch_histogram: Vec<usize>,
}

impl EmulatorReport {
    pub fn ok(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

/// All-pairs check of `d_G ≤ d_H ≤ (1+ε)·d_G + B` with Dijkstra over `H`
/// alone.
pub fn verify_emulator_edges(g: &Graph, edges: &[(u32, u32, Dist)], eps: f64, b_exact: f64, r: usize) -> Result<EmulatorReport> {
    let n = g.n();
    let adj = WeightedAdj::from_edges(n, edges.iter().copied());
    let mut rep = EmulatorReport {
        pairs_checked: 0,
        lower_violations: 0,
        upper_violations: 0,
        examples: Vec::new(),
        max_multiplicative: 1.0,
        max_additive: f64::NEG_INFINITY,
        edges: edges.len(),
        size_ratio: size_ratio(edges.len(), n, r),
        b_exact,
        stretch_histogram: vec![0; crate::STRETCH_BUCKETS],
    };
    for u in 0..n {
        let dg = bfs_from(g, u)?;
        let dh = dijkstra(&adj, u);
        for v in 0..n {
            if u == v {
                continue;
            }
            let (a, b) = (dg[v], dh[v]);
            if a == INF {
                if b != INF {
                    rep.lower_violations += 1;
                    if rep.examples.len() < 20 {
                        rep.examples.push((u as u32, v as u32, a, b));
                    }
                }
                continue;
            }
            rep.pairs_checked += 1;
            let lower_bad = b < a;
            let upper_bad = b == INF || b as f64 > (1.0 + eps) * a as f64 + b_exact + 1e-9;
            if b != INF {
                rep.stretch_histogram[crate::stretch_bucket(b as f64 / a as f64)] += 1;
                rep.max_multiplicative = rep.max_multiplicative.max(b as f64 / a as f64);
                rep.max_additive = rep.max_additive.max(b as f64 - (1.0 + eps) * a as f64);
            } else {
                rep.max_multiplicative = f64::INFINITY;
                rep.max_additive = f64::INFINITY;
            }
            rep.lower_violations += lower_bad as usize;
            rep.upper_violations += upper_bad as usize;
            if (lower_bad || upper_bad) && rep.examples.len() < 20 {
                rep.examples.push((u as u32, v as u32, a, b));
            }
        }
    }
    if rep.pairs_checked == 0 {
        rep.max_additive = 0.0;
    }
    Ok(rep)
}

pub fn verify_emulator(g: &Graph, h: &EmulatorGraph, eps_user: f64) -> Result<EmulatorReport> {
    let edges: Vec<(u32, u32, Dist)> = h.edges.iter().map(|e| (e.u, e.v, e.w)).collect();
    verify_emulator_edges(g, &edges, eps_user, h.b_exact(), h.params.r)
}
