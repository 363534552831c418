//! Distance pipelines built on the emulator: near-additive APSP,
//! `(1+ε)`-MSSP for `O(√n)` sources, and `(2+ε)`-APSP.

use crate::emulator::{build_emulator_with, compute_params, EmulatorGraph, EmulatorMode, EmulatorOptions};
use crate::graph::{bfs_from, dijkstra, Graph, WeightedGraphView};
use crate::hopset::{build_bounded_hopset, hopset_params, BoundedHopset, HITTING_C};
use crate::ledger::RoundLedger;
use crate::minplus::{k_nearest_bounded, minplus_product, MinPlusMatrix};
use crate::primitives::{distance_through_sets, hitting_probability, random_hitting_set, source_detection, verify_hitting_set, HittingSetInstance};
use crate::rng::SeedStream;
use crate::softhit::deterministic_hitting_set_auto;
use crate::{ceil_log2, dist_add, log_n, Dist, Error, Randomness, Result, INF};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Which step last lowered an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    None,
    /// Distances in the emulator (the long-path phase).
    Emulator,
    /// Edge initialization and detours through the high-degree hitting set.
    HighDegree,
    /// Nearest tables, pivots and sparse products on the low-degree subgraph.
    LowDegree,
    /// Hop-bounded detection over a hopset.
    Detection,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::None => "none",
            Phase::Emulator => "emulator",
            Phase::HighDegree => "high_degree",
            Phase::LowDegree => "low_degree",
            Phase::Detection => "detection",
        }
    }
}

/// Estimates `δ(u, v)` for `u` in `rows` and every `v`, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTable {
    pub n: usize,
    pub rows: Vec<u32>,
    values: Vec<Dist>,
    phase: Vec<Phase>,
}

impl EstimateTable {
    fn new(n: usize, rows: Vec<u32>) -> Self {
        let len = rows.len() * n;
        let mut t = EstimateTable { n, rows, values: vec![INF; len], phase: vec![Phase::None; len] };
        for i in 0..t.rows.len() {
            let u = t.rows[i] as usize;
            t.values[i * n + u] = 0;
        }
        t
    }

    /// Row index `i` (not vertex id).
    pub fn get(&self, i: usize, v: usize) -> Dist {
        self.values[i * self.n + v]
    }

    pub fn phase(&self, i: usize, v: usize) -> Phase {
        self.phase[i * self.n + v]
    }

    pub fn row(&self, i: usize) -> &[Dist] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Lowers `δ(row i, v)` to `x` if strictly smaller.
    #[inline]
    fn improve(&mut self, i: usize, v: usize, x: Dist, phase: Phase) -> bool {
        let k = i * self.n + v;
        if x < self.values[k] {
            self.values[k] = x;
            self.phase[k] = phase;
            true
        } else {
            false
        }
    }

    /// `source,target,estimate,phase`, unreachable pairs as `INF`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,target,estimate,phase\n");
        for (i, &u) in self.rows.iter().enumerate() {
            for v in 0..self.n {
                let x = self.get(i, v);
                let xs = if x == INF { "INF".to_string() } else { x.to_string() };
                let _ = writeln!(s, "{u},{v},{xs},{}", self.phase(i, v).as_str());
            }
        }
        s
    }

    /// Pairs `u < v` per phase (all cells for non-square tables).
    pub fn histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for (i, &u) in self.rows.iter().enumerate() {
            for v in 0..self.n {
                if v as u32 == u || (self.rows.len() == self.n && (v as u32) < u) {
                    continue;
                }
                *h.entry(self.phase(i, v).as_str().to_string()).or_insert(0) += 1;
            }
        }
        h
    }

    /// `min(δ(u,v), δ(v,u))` on both cells; needs a square table.
    fn symmetrize(&mut self) {
        debug_assert_eq!(self.rows.len(), self.n);
        let n = self.n;
        for u in 0..n {
            for v in u + 1..n {
                let (a, b) = (u * n + v, v * n + u);
                if self.values[b] < self.values[a] {
                    self.values[a] = self.values[b];
                    self.phase[a] = self.phase[b];
                } else {
                    self.values[b] = self.values[a];
                    self.phase[b] = self.phase[a];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppOptions {
    pub mode: Randomness,
    /// Emulator levels; `max(2, ⌈log₂ log₂ n⌉)` when unset.
    pub r: Option<usize>,
    /// Source cap for MSSP: `|S| ≤ c·√n`.
    pub source_cap: f64,
    pub emulator: EmulatorOptions,
}

impl Default for AppOptions {
    fn default() -> Self {
        AppOptions {
            mode: Randomness::Randomized,
            r: None,
            source_cap: 2.0,
            emulator: EmulatorOptions { whp_strict: false, ..EmulatorOptions::default() },
        }
    }
}

pub fn default_levels(n: usize) -> usize {
    (ceil_log2(log_n(n) as u64) as usize).max(2)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::param("eps", format!("{eps} must lie in (0, 1)")))
    }
}

/// The emulator every pipeline starts with, learned by all vertices.
fn shared_emulator(g: &Graph, eps: f64, opts: &AppOptions, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<EmulatorGraph> {
    let r = opts.r.unwrap_or_else(|| default_levels(g.n()));
    let mode = match opts.mode {
        Randomness::Randomized => EmulatorMode::CliqueWhp,
        Randomness::Deterministic => EmulatorMode::Deterministic,
    };
    let h = build_emulator_with(g, eps, r, mode, &opts.emulator, &stream.child("emulator"), ledger)?;
    ledger.charge_broadcast_learn(h.edges.len() as f64);
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct HitCheck {
    pub name: &'static str,
    pub holders: usize,
    pub size: usize,
    pub misses: usize,
}

#[derive(Debug, Clone)]
pub struct AppOutcome {
    pub table: EstimateTable,
    pub emulator_edges: usize,
    pub r: usize,
    pub b_exact: f64,
    /// Short-path threshold `⌈2B/ε⌉`; zero for the near-additive pipeline.
    pub t: u64,
    pub hitting: Vec<HitCheck>,
    pub warnings: Vec<String>,
}

/// `(1+ε, B)`-APSP: every vertex learns the emulator and runs Dijkstra on it.
pub fn apsp_near_additive(g: &Graph, eps: f64, opts: &AppOptions, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<AppOutcome> {
    check_eps(eps)?;
    let n = g.n();
    ledger.scoped("apsp_additive", |ledger| {
        let h = shared_emulator(g, eps, opts, stream, ledger)?;
        let adj = h.adjacency();
        let mut table = EstimateTable::new(n, (0..n as u32).collect());
        for u in 0..n {
            for (v, &x) in dijkstra(&adj, u).iter().enumerate() {
                table.improve(u, v, x, Phase::Emulator);
            }
        }
        Ok(AppOutcome {
            table,
            emulator_edges: h.edges.len(),
            r: h.params.r,
            b_exact: h.b_exact(),
            t: 0,
            hitting: Vec::new(),
            warnings: h.warnings.clone(),
        })
    })
}

fn short_threshold(b: f64, eps: f64) -> u64 {
    ((2.0 * b / eps).ceil() as u64).max(1)
}

/// `(1+ε)`-MSSP: long pairs from a `(1+ε/2, B)`-emulator, pairs within
/// `t = ⌈2B/ε⌉` from a `(β, ε, t)`-hopset and `β`-hop source detection.
pub fn mssp(g: &Graph, sources: &[u32], eps: f64, opts: &AppOptions, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<AppOutcome> {
    check_eps(eps)?;
    let n = g.n();
    let mut s: Vec<u32> = sources.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&v| v as usize >= n) {
        return Err(Error::Argument(format!("source {bad} out of range")));
    }
    let cap = opts.source_cap * (n as f64).sqrt();
    if s.len() as f64 > cap {
        return Err(Error::param("sources", format!("{} sources exceed the cap {cap:.1}", s.len())));
    }
    ledger.scoped("mssp", |ledger| {
        let h = shared_emulator(g, eps / 2.0, opts, stream, ledger)?;
        let b = h.b_exact();
        let t = short_threshold(b, eps);
        let hop = build_bounded_hopset(g, eps, t, opts.mode, &stream.child("mssp/hopset"), ledger)?;
        let gv = WeightedGraphView::new(g, hop.overlay())?;
        let found = source_detection(&gv, &s, hop.beta(), ledger)?;
        let adj = h.adjacency();
        let mut table = EstimateTable::new(n, s.clone());
        for (i, &src) in s.iter().enumerate() {
            for (v, &x) in dijkstra(&adj, src as usize).iter().enumerate() {
                table.improve(i, v, x, Phase::Emulator);
            }
            if let Some(row) = found.from_source(src) {
                for (v, &x) in row.iter().enumerate() {
                    table.improve(i, v, x, Phase::Detection);
                }
            }
        }
        let mut warnings = h.warnings.clone();
        if !hop.missed.is_empty() {
            warnings.push(format!("hopset pivots missed {} full tables", hop.missed.len()));
        }
        Ok(AppOutcome { table, emulator_edges: h.edges.len(), r: h.params.r, b_exact: b, t, hitting: Vec::new(), warnings })
    })
}

fn hitting_set(
    inst: &HittingSetInstance,
    mode: Randomness,
    stream: &SeedStream,
    label: &str,
    ledger: &mut RoundLedger,
) -> Result<Vec<u32>> {
    if inst.holders.is_empty() {
        return Ok(Vec::new());
    }
    match mode {
        Randomness::Randomized => random_hitting_set(inst, HITTING_C, stream, label, ledger),
        Randomness::Deterministic => Ok(deterministic_hitting_set_auto(inst, HITTING_C, ledger)?.0),
    }
}

/// Thresholds of the `(2+ε)` pipeline at size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoEpsThresholds {
    /// High-degree cut `⌈√n·log n⌉`.
    pub high_degree: usize,
    /// Table size `⌈n^{1/4}·log² n⌉`, at most `n`.
    pub k: usize,
    /// Low-degree cut inside the sparse subgraph, `⌈n/k²⌉ ≥ 1`.
    pub low_degree: usize,
}

pub fn two_eps_thresholds(n: usize) -> TwoEpsThresholds {
    let nf = n.max(1) as f64;
    let lg = log_n(n) as f64;
    let high_degree = ((nf.sqrt() * lg).ceil() as usize).max(1);
    let k = ((nf.powf(0.25) * lg * lg).ceil() as usize).clamp(1, n.max(1));
    let low_degree = ((nf / (k * k) as f64).ceil() as usize).max(1);
    TwoEpsThresholds { high_degree, k, low_degree }
}

/// `W1 · W2 · W1ᵀ`: the lightest `u → u' → v' → v` walk with `u'` a row
/// of `W1[u]`, `(u', v')` an entry of `W2`, and `v'` a row of `W1[v]`.
pub fn edge_detour_product(w1: &MinPlusMatrix, w2: &MinPlusMatrix, ledger: &mut RoundLedger) -> Result<MinPlusMatrix> {
    let w12 = minplus_product(w1, w2)?;
    ledger.charge_sparse_mm(w1.density(), w2.density());
    let w3 = w1.transpose();
    let w = minplus_product(&w12, &w3)?;
    ledger.charge_sparse_mm(w12.density(), w3.density());
    Ok(w)
}

/// Hopset shared by detections within one subgraph, built on first use.
struct LazyHopset<'a> {
    g: &'a Graph,
    eps: f64,
    t: u64,
    mode: Randomness,
    stream: SeedStream,
    built: Option<BoundedHopset>,
}

impl<'a> LazyHopset<'a> {
    fn detect(&mut self, sources: &[u32], table: &mut EstimateTable, phase: Phase, ledger: &mut RoundLedger) -> Result<()> {
        if sources.is_empty() {
            return Ok(());
        }
        if self.built.is_none() {
            self.built = Some(build_bounded_hopset(self.g, self.eps, self.t, self.mode, &self.stream, ledger)?);
        }
        let hop = self.built.as_ref().expect("built above");
        let gv = WeightedGraphView::new(self.g, hop.overlay())?;
        let found = source_detection(&gv, sources, hop.beta(), ledger)?;
        for &s in sources {
            if let Some(row) = found.from_source(s) {
                for (v, &x) in row.iter().enumerate() {
                    table.improve(v, s as usize, x, phase);
                    table.improve(s as usize, v, x, phase);
                }
            }
        }
        Ok(())
    }
}

/// `(2+ε)`-APSP in three phases; each only lowers estimates.
pub fn apsp_2eps(g: &Graph, eps: f64, opts: &AppOptions, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<AppOutcome> {
    check_eps(eps)?;
    let n = g.n();
    let th = two_eps_thresholds(n);
    ledger.scoped("apsp_2eps", |ledger| {
        let h = shared_emulator(g, eps / 2.0, opts, stream, ledger)?;
        let b = h.b_exact();
        let t = short_threshold(b, eps);
        let mut table = EstimateTable::new(n, (0..n as u32).collect());
        let mut hitting = Vec::new();
        let mut warnings = h.warnings.clone();

        // Long paths: distances in the emulator.
        let adj = h.adjacency();
        for u in 0..n {
            for (v, &x) in dijkstra(&adj, u).iter().enumerate() {
                table.improve(u, v, x, Phase::Emulator);
            }
        }

        ledger.scoped("high_degree", |ledger| -> Result<()> {
            for (u, v) in g.edges() {
                table.improve(u as usize, v as usize, 1, Phase::HighDegree);
                table.improve(v as usize, u as usize, 1, Phase::HighDegree);
            }
            let holders: Vec<(u32, Vec<u32>)> =
                (0..n).filter(|&v| g.degree(v) >= th.high_degree).map(|v| (v as u32, g.neighbors(v).to_vec())).collect();
            let inst = HittingSetInstance::new(n, th.high_degree, holders)?;
            let s = hitting_set(&inst, opts.mode, stream, "apsp_2eps/S", ledger)?;
            hitting.push(HitCheck { name: "S", holders: inst.holders.len(), size: s.len(), misses: verify_hitting_set(&inst, &s).misses.len() });
            if s.is_empty() {
                return Ok(());
            }
            let mut hop = LazyHopset { g, eps: eps / 2.0, t: 2 * t, mode: opts.mode, stream: stream.child("apsp_2eps/hopset_g"), built: None };
            hop.detect(&s, &mut table, Phase::HighDegree, ledger)?;
            let witnesses = vec![s.clone(); n];
            let through = distance_through_sets(&witnesses, |v, w| Some(table.get(v as usize, w as usize)), ledger)?;
            for u in 0..n {
                for v in 0..n {
                    table.improve(u, v, through.get(u, v), Phase::HighDegree);
                }
            }
            Ok(())
        })?;

        ledger.scoped("low_degree", |ledger| -> Result<()> {
            let gp = g.filter_edges(|u, v| g.degree(u as usize) <= th.high_degree || g.degree(v as usize) <= th.high_degree);
            let nearest = k_nearest_bounded(&gp, th.k, t, ledger)?;
            for u in 0..n {
                for &(v, d) in nearest.row(u) {
                    table.improve(u, v as usize, d, Phase::LowDegree);
                }
            }
            let witnesses: Vec<Vec<u32>> = (0..n).map(|u| nearest.row(u).iter().map(|e| e.0).collect()).collect();
            let through = distance_through_sets(&witnesses, |v, w| Some(table.get(v as usize, w as usize)), ledger)?;
            for u in 0..n {
                for v in 0..n {
                    table.improve(u, v, through.get(u, v), Phase::LowDegree);
                }
            }

            let mut hop = LazyHopset { g: &gp, eps: eps / 2.0, t: 2 * t, mode: opts.mode, stream: stream.child("apsp_2eps/hopset_gp"), built: None };

            // Pivots from a hitting set of the full tables.
            let holders: Vec<(u32, Vec<u32>)> = (0..n).filter(|&v| nearest.is_full(v)).map(|v| (v as u32, witnesses[v].clone())).collect();
            let inst = HittingSetInstance::new(n, th.k, holders)?;
            let a = hitting_set(&inst, opts.mode, stream, "apsp_2eps/A", ledger)?;
            hitting.push(HitCheck { name: "A", holders: inst.holders.len(), size: a.len(), misses: verify_hitting_set(&inst, &a).misses.len() });
            hop.detect(&a, &mut table, Phase::LowDegree, ledger)?;
            let mut in_a = vec![false; n];
            for &x in &a {
                in_a[x as usize] = true;
            }
            if !a.is_empty() {
                ledger.charge_flat("pivot_exchange", 2.0);
                for u in 0..n {
                    if let Some(&(p, _)) = nearest.row(u).iter().find(|e| in_a[e.0 as usize]) {
                        let p = p as usize;
                        let dup = table.get(u, p);
                        for v in 0..n {
                            let x = dist_add(dup, table.get(p, v));
                            table.improve(u, v, x, Phase::LowDegree);
                            table.improve(v, u, x, Phase::LowDegree);
                        }
                    }
                }
            }

            // Detours through neighbours of table entries.
            let holders: Vec<(u32, Vec<u32>)> =
                (0..n).filter(|&v| gp.degree(v) >= th.low_degree).map(|v| (v as u32, gp.neighbors(v).to_vec())).collect();
            let inst = HittingSetInstance::new(n, th.low_degree, holders)?;
            let a2 = hitting_set(&inst, opts.mode, stream, "apsp_2eps/A2", ledger)?;
            hitting.push(HitCheck { name: "A'", holders: inst.holders.len(), size: a2.len(), misses: verify_hitting_set(&inst, &a2).misses.len() });
            if !a2.is_empty() {
                hop.detect(&a2, &mut table, Phase::LowDegree, ledger)?;
                let mut in_a2 = vec![false; n];
                for &x in &a2 {
                    in_a2[x as usize] = true;
                }
                let hook: Vec<Option<u32>> = (0..n).map(|v| gp.neighbors(v).iter().copied().find(|&w| in_a2[w as usize])).collect();
                ledger.charge_flat("a_prime_announce", 1.0);
                let m1_rows: Vec<Vec<(u32, Dist)>> = (0..n)
                    .map(|u| {
                        let mut ws: Vec<u32> = witnesses[u].iter().filter_map(|&v| hook[v as usize]).collect();
                        ws.sort_unstable();
                        ws.dedup();
                        ws.into_iter().map(|w| (w, table.get(u, w as usize))).filter(|e| e.1 != INF).collect()
                    })
                    .collect();
                let m2_rows: Vec<Vec<(u32, Dist)>> = (0..n)
                    .map(|w| {
                        if !in_a2[w] {
                            return Vec::new();
                        }
                        table.row(w).iter().enumerate().filter(|e| *e.1 != INF).map(|(v, &x)| (v as u32, x)).collect()
                    })
                    .collect();
                let m1 = MinPlusMatrix::from_rows(n, m1_rows)?;
                let m2 = MinPlusMatrix::from_rows(n, m2_rows)?;
                let prod = minplus_product(&m1, &m2)?;
                ledger.charge_sparse_mm(m1.density(), m2.density());
                for u in 0..n {
                    for &(v, x) in prod.row(u) {
                        table.improve(u, v as usize, x, Phase::LowDegree);
                    }
                }
            }

            // Paths through one edge with a low-degree endpoint.
            let w1_rows: Vec<Vec<(u32, Dist)>> =
                (0..n).map(|u| nearest.row(u).iter().map(|&(v, _)| (v, table.get(u, v as usize))).collect()).collect();
            let w2_rows: Vec<Vec<(u32, Dist)>> = (0..n)
                .map(|u| if gp.degree(u) <= th.low_degree { gp.neighbors(u).iter().map(|&v| (v, 1)).collect() } else { Vec::new() })
                .collect();
            let w = edge_detour_product(&MinPlusMatrix::from_rows(n, w1_rows)?, &MinPlusMatrix::from_rows(n, w2_rows)?, ledger)?;
            for u in 0..n {
                for &(v, x) in w.row(u) {
                    table.improve(u, v as usize, x, Phase::LowDegree);
                    table.improve(v as usize, u, x, Phase::LowDegree);
                }
            }
            Ok(())
        })?;

        table.symmetrize();
        for c in &hitting {
            if c.misses > 0 {
                warnings.push(format!("hitting set {} missed {} of {} holders", c.name, c.misses, c.holders));
            }
        }
        Ok(AppOutcome { table, emulator_edges: h.edges.len(), r: h.params.r, b_exact: b, t, hitting, warnings })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub u: u32,
    pub v: u32,
    pub d: Dist,
    pub estimate: Dist,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApspReport {
    pub pairs_checked: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    /// Up to 20 violating pairs.
    pub examples: Vec<PairResidual>,
    pub max_multiplicative: f64,
    pub mean_multiplicative: f64,
    /// Largest `δ − mult·d`.
    pub max_additive: f64,
    /// Pair with the largest ratio `δ/d`.
    pub worst: Option<PairResidual>,
    pub histogram: BTreeMap<String, usize>,
    /// Pair counts per stretch bucket, see [`crate::stretch_bucket`].
    pub stretch_histogram: Vec<usize>,
}

impl ApspReport {
    pub fn ok(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

/// Checks `d ≤ δ ≤ mult·d + add` on every pair against BFS from each row.
pub fn verify_estimates(g: &Graph, table: &EstimateTable, mult: f64, add: f64) -> Result<ApspReport> {
    let mut rep = ApspReport {
        pairs_checked: 0,
        lower_violations: 0,
        upper_violations: 0,
        examples: Vec::new(),
        max_multiplicative: 1.0,
        mean_multiplicative: 1.0,
        max_additive: 0.0,
        worst: None,
        histogram: table.histogram(),
        stretch_histogram: vec![0; crate::STRETCH_BUCKETS],
    };
    let mut ratio_sum = 0.0;
    let mut ratio_count = 0usize;
    let mut worst_ratio = 0.0;
    for (i, &u) in table.rows.iter().enumerate() {
        let d = bfs_from(g, u as usize)?;
        for v in 0..table.n {
            if v as u32 == u {
                continue;
            }
            let (dv, x) = (d[v], table.get(i, v));
            let pr = || PairResidual { u, v: v as u32, d: dv, estimate: x, phase: table.phase(i, v) };
            rep.pairs_checked += 1;
            let (lower_bad, upper_bad) = if dv == INF {
                (x != INF, false)
            } else if x == INF {
                (false, true)
            } else {
                (x < dv, x as f64 > mult * dv as f64 + add + 1e-9)
            };
            if dv != INF && x != INF {
                let ratio = x as f64 / dv as f64;
                rep.stretch_histogram[crate::stretch_bucket(ratio)] += 1;
                ratio_sum += ratio;
                ratio_count += 1;
                rep.max_additive = rep.max_additive.max(x as f64 - mult * dv as f64);
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    rep.worst = Some(pr());
                }
            }
            rep.lower_violations += lower_bad as usize;
            rep.upper_violations += upper_bad as usize;
            if (lower_bad || upper_bad) && rep.examples.len() < 20 {
                rep.examples.push(pr());
            }
        }
    }
    if ratio_count > 0 {
        rep.max_multiplicative = worst_ratio.max(1.0);
        rep.mean_multiplicative = ratio_sum / ratio_count as f64;
    }
    Ok(rep)
}

fn project_nearest(ledger: &mut RoundLedger, k: f64, d: u64) {
    for _ in 0..ceil_log2(d) {
        ledger.charge_filtered_mm(k, k, k, d as f64);
    }
}

fn project_hopset(ledger: &mut RoundLedger, n: usize, m: f64, eps: f64, t: u64) -> Result<(f64, u64)> {
    let p = hopset_params(n, eps, t)?;
    let nf = n as f64;
    let size = nf.powf(1.5) * nf.log2();
    ledger.scoped("hopset", |ledger| {
        project_nearest(ledger, p.k as f64, t);
        ledger.charge_flat("hitting_set_announce", 1.0);
        let a1 = nf * hitting_probability(n, p.k, HITTING_C);
        for _ in 0..p.iterations {
            ledger.charge_source_detection(m + size, a1, (4 * p.beta) as f64);
        }
    });
    Ok((size, p.beta))
}

/// Charges an MSSP run would incur at size `n` with `⌈√n⌉` sources, using
/// nominal worst-case sizes (`m = n(n−1)/2`, table densities equal to `k`,
/// hopsets of `n^{3/2}·log₂ n` edges, an emulator at its size bound) instead
/// of running anything. Mirrors the charge sequence of [`mssp`] in
/// randomized mode.
pub fn mssp_round_projection(n: usize, eps: f64) -> Result<RoundLedger> {
    check_eps(eps)?;
    let nf = n as f64;
    let m = nf * (nf - 1.0) / 2.0;
    let r = default_levels(n);
    let params = compute_params(n, eps / 2.0, r)?;
    let mut ledger = RoundLedger::unit(n);
    ledger.scoped("mssp", |ledger| -> Result<()> {
        ledger.scoped("emulator", |ledger| -> Result<()> {
            let lglglg = ceil_log2(ceil_log2(log_n(n) as u64).max(1) as u64).max(1);
            ledger.charge_flat("level_announce", lglglg as f64);
            project_nearest(ledger, params.k as f64, params.top_radius);
            ledger.charge_flat("run_select", 2.0);
            let (size, beta) = project_hopset(ledger, n, m, params.eps_hopset, params.top_radius)?;
            ledger.charge_source_detection(m + size, nf.sqrt(), beta as f64);
            Ok(())
        })?;
        let emulator_size = 4.0 * r as f64 * nf.powf(1.0 + 1.0 / 2f64.powi(r as i32));
        ledger.charge_broadcast_learn(emulator_size);
        let t = short_threshold(params.b_exact(EmulatorMode::CliqueWhp), eps);
        let (size, beta) = project_hopset(ledger, n, m, eps, t)?;
        ledger.charge_source_detection(m + size, nf.sqrt().ceil(), beta as f64);
        Ok(())
    })?;
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{exact_apsp, generate, GraphSpec};

    fn ledger(n: usize) -> RoundLedger {
        RoundLedger::unit(n)
    }

    #[test]
    fn thresholds() {
        let th = two_eps_thresholds(1024);
        assert_eq!(th.high_degree, 320);
        assert_eq!(th.k, 566);
        assert_eq!(th.low_degree, 1);
        let th = two_eps_thresholds(1 << 20);
        assert_eq!(th.k, (32.0f64 * 400.0) as usize);
        assert_eq!(th.low_degree, ((1u64 << 20) as f64 / (12800.0f64 * 12800.0)).ceil() as usize);
        assert_eq!(default_levels(256), 3);
        assert_eq!(default_levels(65536), 4);
        assert_eq!(default_levels(8), 2);
    }

    #[test]
    fn near_additive_on_path_and_complete() {
        let g = generate(&GraphSpec::Path { n: 64 }, 0).unwrap();
        let out = apsp_near_additive(&g, 0.5, &AppOptions::default(), &SeedStream::new(1), &mut ledger(64)).unwrap();
        let rep = verify_estimates(&g, &out.table, 1.5, out.b_exact).unwrap();
        assert!(rep.ok(), "{:?}", rep.examples);
        assert!(out.table.get(0, 63) >= 63);
        let g = generate(&GraphSpec::Complete { n: 30 }, 0).unwrap();
        let out = apsp_near_additive(&g, 0.5, &AppOptions::default(), &SeedStream::new(1), &mut ledger(30)).unwrap();
        assert!(verify_estimates(&g, &out.table, 1.5, out.b_exact).unwrap().ok());
    }

    #[test]
    fn mssp_single_source_and_cap() {
        let g = generate(&GraphSpec::Path { n: 32 }, 0).unwrap();
        let out = mssp(&g, &[5], 0.5, &AppOptions::default(), &SeedStream::new(2), &mut ledger(32)).unwrap();
        assert_eq!(out.table.get(0, 5), 0);
        let bfs = bfs_from(&g, 5).unwrap();
        for v in 0..32 {
            let x = out.table.get(0, v);
            assert!(x >= bfs[v] && x as f64 <= 1.5 * bfs[v] as f64);
        }
        let too_many: Vec<u32> = (0..12).collect();
        assert!(matches!(mssp(&g, &too_many, 0.5, &AppOptions::default(), &SeedStream::new(2), &mut ledger(32)), Err(Error::Parameter { .. })));
        assert!(mssp(&g, &[40], 0.5, &AppOptions::default(), &SeedStream::new(2), &mut ledger(32)).is_err());
    }

    #[test]
    fn two_eps_on_complete_and_star() {
        let g = generate(&GraphSpec::Complete { n: 40 }, 0).unwrap();
        let out = apsp_2eps(&g, 0.5, &AppOptions::default(), &SeedStream::new(3), &mut ledger(40)).unwrap();
        for u in 0..40 {
            for v in 0..40 {
                assert_eq!(out.table.get(u, v), (u != v) as Dist);
            }
        }
        let g = generate(&GraphSpec::Star { n: 200 }, 0).unwrap();
        let out = apsp_2eps(&g, 0.5, &AppOptions::default(), &SeedStream::new(3), &mut ledger(200)).unwrap();
        let rep = verify_estimates(&g, &out.table, 2.5, 0.0).unwrap();
        assert!(rep.ok(), "{:?}", rep.examples);
        assert!(out.table.get(1, 2) <= 5);
    }

    #[test]
    fn two_eps_bounds_and_symmetry() {
        for (seed, p) in [(0u64, 0.02), (1, 0.3), (2, 0.006)] {
            let g = generate(&GraphSpec::gnp(150, p), seed).unwrap();
            for mode in [Randomness::Randomized, Randomness::Deterministic] {
                let opts = AppOptions { mode, ..AppOptions::default() };
                let out = apsp_2eps(&g, 0.5, &opts, &SeedStream::new(seed), &mut ledger(150)).unwrap();
                let rep = verify_estimates(&g, &out.table, 2.5, 0.0).unwrap();
                assert!(rep.ok(), "p={p} {mode:?}: {:?}", rep.examples);
                for u in 0..150 {
                    for v in 0..150 {
                        assert_eq!(out.table.get(u, v), out.table.get(v, u));
                    }
                }
            }
        }
    }

    #[test]
    fn edge_detour_matches_triple_loop() {
        let g = generate(&GraphSpec::gnp(18, 0.2), 5).unwrap();
        let exact = exact_apsp(&g, 64).unwrap();
        let n = 18;
        let near = k_nearest_bounded(&g, 4, 3, &mut ledger(n)).unwrap();
        let w1: Vec<Vec<(u32, Dist)>> = (0..n).map(|u| near.row(u).to_vec()).collect();
        let low: Vec<bool> = (0..n).map(|u| g.degree(u) <= 3).collect();
        let w2: Vec<Vec<(u32, Dist)>> = (0..n).map(|u| if low[u] { g.neighbors(u).iter().map(|&v| (v, 1)).collect() } else { Vec::new() }).collect();
        let w = edge_detour_product(&MinPlusMatrix::from_rows(n, w1).unwrap(), &MinPlusMatrix::from_rows(n, w2).unwrap(), &mut ledger(n)).unwrap();
        for u in 0..n {
            for v in 0..n {
                let mut best = INF;
                for &(a, da) in near.row(u) {
                    for &(b, db) in near.row(v) {
                        if low[a as usize] && g.has_edge(a as usize, b as usize) {
                            best = best.min(da + 1 + db);
                        }
                    }
                }
                assert_eq!(w.get(u, v), best, "{u} {v}");
                if best != INF {
                    assert!(best >= exact.get(u, v));
                }
            }
        }
    }

    #[test]
    fn verifier_flags_violations() {
        let g = generate(&GraphSpec::Path { n: 4 }, 0).unwrap();
        let mut t = EstimateTable::new(4, (0..4).collect());
        let exact = exact_apsp(&g, 16).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                t.improve(u, v, exact.get(u, v), Phase::Emulator);
            }
        }
        let rep = verify_estimates(&g, &t, 1.0, 0.0).unwrap();
        assert!(rep.ok());
        assert_eq!(rep.max_multiplicative, 1.0);
        t.improve(0, 3, 2, Phase::LowDegree);
        let rep = verify_estimates(&g, &t, 1.0, 0.0).unwrap();
        assert_eq!(rep.lower_violations, 1);
        assert_eq!((rep.examples[0].u, rep.examples[0].v), (0, 3));
        assert!(t.to_csv().contains("0,3,2,low_degree"));
    }

    #[test]
    fn projection_mirrors_real_charges() {
        let n = 256;
        let g = generate(&GraphSpec::gnp(n, 8.0 / n as f64), 1).unwrap();
        let sources: Vec<u32> = (0..16).collect();
        let mut real = ledger(n);
        mssp(&g, &sources, 0.5, &AppOptions::default(), &SeedStream::new(1), &mut real).unwrap();
        let proj = mssp_round_projection(n, 0.5).unwrap();
        let (a, b) = (real.by_primitive(), proj.by_primitive());
        assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
        let ratio = real.total() / proj.total();
        assert!((0.5..=1.0 + 1e-9).contains(&ratio), "real {} projected {}", real.total(), proj.total());
    }
}
