//! Bounded `(β, ε, t)`-hopsets for unweighted graphs.
//!
//! Pairs within distance `t` get a `β`-hop path in `G ∪ H` whose weight is
//! at most `(1+ε)` times their distance. Vertices outside the pivot set `A₁`
//! connect to their bounded bunch with exact weights; pivots connect among
//! themselves through `⌈log₂ t⌉` rounds of hop-bounded source detection.

use crate::graph::{bfs_from, hop_bounded_from, Graph, WeightedAdj, WeightedGraphView};
use crate::ledger::RoundLedger;
use crate::minplus::{k_nearest_bounded, NearestTable};
use crate::primitives::{random_hitting_set, source_detection, HittingSetInstance};
use crate::rng::SeedStream;
use crate::softhit::deterministic_hitting_set_auto;
use crate::{ceil_log2, log_n, Dist, Error, Randomness, Result, INF};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Constant `c` of the hitting-set sampling probability `c·ln n/k`.
pub const HITTING_C: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopsetParams {
    pub eps: f64,
    /// Per-iteration stretch `min(ε,1)/⌈log₂ t⌉`.
    pub eps0: f64,
    pub beta: u64,
    pub k: usize,
    pub iterations: u32,
}

pub fn hopset_params(n: usize, eps: f64, t: u64) -> Result<HopsetParams> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", format!("{eps} must be positive")));
    }
    if t == 0 {
        return Err(Error::param("t", "must be at least 1"));
    }
    let iterations = ceil_log2(t);
    let eps0 = eps.min(1.0) / iterations.max(1) as f64;
    let delta = eps0 / 4.0;
    let beta = (3.0 / delta).ceil() as u64;
    let k = (((n as f64).sqrt() * log_n(n) as f64).ceil() as usize).clamp(1, n.max(1));
    Ok(HopsetParams { eps, eps0, beta, k, iterations })
}

#[derive(Debug, Clone)]
pub struct BoundedHopset {
    pub n: usize,
    pub t: u64,
    pub params: HopsetParams,
    /// `(u, v, w)` with `u < v`, sorted.
    pub edges: Vec<(u32, u32, Dist)>,
    pub a1: Vec<u32>,
    /// `p(v)` for vertices outside `A₁` whose table holds a pivot.
    pub pivot: Vec<Option<u32>>,
    /// Vertices with a full table that `A₁` failed to hit.
    pub missed: Vec<u32>,
    /// Pivot iterations that changed the edge set.
    pub iterations_run: u32,
    /// Number of `H⁰` (bunch) edges.
    pub bunch_edges: usize,
}

impl BoundedHopset {
    pub fn beta(&self) -> u64 {
        self.params.beta
    }

    pub fn overlay(&self) -> Vec<(u32, u32, Dist)> {
        self.edges.clone()
    }

    /// Edge count divided by `n^{3/2}·log₂ n`.
    pub fn size_constant(&self) -> f64 {
        let n = self.n.max(2) as f64;
        self.edges.len() as f64 / (n.powf(1.5) * n.log2())
    }

    /// Weighted edge list, one `u v w` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for &(u, v, w) in &self.edges {
            let _ = writeln!(s, "{u} {v} {w}");
        }
        s
    }
}

fn insert_min(edges: &mut BTreeMap<(u32, u32), Dist>, u: u32, v: u32, w: Dist) -> bool {
    let key = if u < v { (u, v) } else { (v, u) };
    match edges.get_mut(&key) {
        Some(x) if *x <= w => false,
        Some(x) => {
            *x = w;
            true
        }
        None => {
            edges.insert(key, w);
            true
        }
    }
}

/// Bounded bunch of `v ∉ A₁` from its table: every strictly closer vertex
/// plus the first pivot. Without a pivot the whole table is used.
fn bunch(table: &NearestTable, v: usize, in_a1: &[bool]) -> (Vec<(u32, Dist)>, Option<u32>) {
    let row = table.row(v);
    match row.iter().find(|e| in_a1[e.0 as usize]) {
        Some(&(p, dp)) => {
            let mut b: Vec<(u32, Dist)> = row.iter().filter(|e| e.1 < dp && e.0 as usize != v).copied().collect();
            b.push((p, dp));
            (b, Some(p))
        }
        None => (row.iter().filter(|e| e.0 as usize != v).copied().collect(), None),
    }
}

/// Pivot set `A₁` hitting every full `(k, t)`-nearest table.
pub fn pivot_set(table: &NearestTable, k: usize, mode: Randomness, stream: &SeedStream, ledger: &mut RoundLedger) -> Result<Vec<u32>> {
    let n = table.n();
    let holders: Vec<(u32, Vec<u32>)> =
        (0..n).filter(|&v| table.is_full(v)).map(|v| (v as u32, table.row(v).iter().map(|e| e.0).collect())).collect();
    let inst = HittingSetInstance::new(n, k, holders)?;
    match mode {
        Randomness::Randomized => random_hitting_set(&inst, HITTING_C, stream, "hopset/a1", ledger),
        Randomness::Deterministic => Ok(deterministic_hitting_set_auto(&inst, HITTING_C, ledger)?.0),
    }
}

/// Builds a `(β, ε, t)`-hopset.
///
/// A randomized pivot set can fail to hit a full table; the build still
/// completes, using the whole table as that vertex's bunch, and lists the
/// vertex in `missed`.
pub fn build_bounded_hopset(
    g: &Graph,
    eps: f64,
    t: u64,
    mode: Randomness,
    stream: &SeedStream,
    ledger: &mut RoundLedger,
) -> Result<BoundedHopset> {
    let n = g.n();
    let params = hopset_params(n, eps, t)?;
    ledger.scoped("hopset", |ledger| {
        let table = k_nearest_bounded(g, params.k, t, ledger)?;
        let a1 = pivot_set(&table, params.k, mode, stream, ledger)?;
        let mut in_a1 = vec![false; n];
        for &a in &a1 {
            in_a1[a as usize] = true;
        }

        let mut edges = BTreeMap::new();
        let mut pivot = vec![None; n];
        let mut missed = Vec::new();
        for v in (0..n).filter(|&v| !in_a1[v]) {
            let (b, p) = bunch(&table, v, &in_a1);
            if p.is_none() && table.is_full(v) {
                missed.push(v as u32);
            }
            pivot[v] = p;
            for (u, d) in b {
                insert_min(&mut edges, v as u32, u, d);
            }
        }
        let bunch_edges = edges.len();

        let hops = 4 * params.beta;
        let mut iterations_run = 0;
        let mut stable = false;
        for _ in 0..params.iterations {
            let overlay: Vec<(u32, u32, Dist)> = edges.iter().map(|(&(u, v), &w)| (u, v, w)).collect();
            let gv = WeightedGraphView::new(g, overlay)?;
            if stable {
                ledger.charge_source_detection(gv.m() as f64, a1.len() as f64, hops as f64);
                continue;
            }
            let found = source_detection(&gv, &a1, hops, ledger)?;
            let mut changed = false;
            for &a in &a1 {
                for (b, d) in found.detected(a as usize) {
                    if b != a && in_a1[b as usize] {
                        changed |= insert_min(&mut edges, a, b, d);
                    }
                }
            }
            if changed {
                iterations_run += 1;
            } else {
                stable = true;
            }
        }

        let edges = edges.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        Ok(BoundedHopset { n, t, params, edges, a1, pivot, missed, iterations_run, bunch_edges })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopsetReport {
    pub pairs_checked: usize,
    /// `(u, v, d_G, d^β_{G∪H})` for every failing pair.
    pub violations: Vec<(u32, u32, Dist, Dist)>,
    /// Largest `d^β_{G∪H}/d_G` over checked pairs.
    pub worst_stretch: f64,
}

impl HopsetReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `d_G ≤ d^β_{G∪H} ≤ (1+ε)·d_G` for every pair with `d_G ≤ t`.
pub fn verify_hopset(g: &Graph, overlay: &[(u32, u32, Dist)], beta: u64, eps: f64, t: u64) -> Result<HopsetReport> {
    let adj: WeightedAdj = WeightedGraphView::new(g, overlay.to_vec())?.adjacency();
    let mut report = HopsetReport { pairs_checked: 0, violations: Vec::new(), worst_stretch: 1.0 };
    for u in 0..g.n() {
        let exact = bfs_from(g, u)?;
        let hop = hop_bounded_from(&adj, u, beta);
        for v in 0..g.n() {
            let d = exact[v];
            if v == u || d == INF || d as u64 > t {
                continue;
            }
            report.pairs_checked += 1;
            let dh = hop[v];
            let stretch = if dh == INF { f64::INFINITY } else { dh as f64 / d as f64 };
            report.worst_stretch = report.worst_stretch.max(stretch);
            if dh < d || stretch > 1.0 + eps + 1e-12 {
                report.violations.push((u as u32, v as u32, d, dh));
            }
        }
    }
    Ok(report)
}
