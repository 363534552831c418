use super::Graph;
use crate::{dist_add, Dist, Error, Result, INF};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// `G ∪ H`: the base graph (unit weights) plus weighted overlay edges.
#[derive(Debug, Clone)]
pub struct WeightedGraphView<'a> {
    pub base: &'a Graph,
    pub extra: Vec<(u32, u32, Dist)>,
}

impl<'a> WeightedGraphView<'a> {
    pub fn new(base: &'a Graph, extra: Vec<(u32, u32, Dist)>) -> Result<Self> {
        let n = base.n();
        for &(u, v, w) in &extra {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Argument(format!("overlay edge ({u},{v}) out of range")));
            }
            if w == 0 || w == INF {
                return Err(Error::Argument(format!("overlay edge ({u},{v}) has weight {w}")));
            }
        }
        Ok(WeightedGraphView { base, extra })
    }

    pub fn unweighted(base: &'a Graph) -> Self {
        WeightedGraphView { base, extra: Vec::new() }
    }

    /// Undirected edge count of `G ∪ H` (overlay edges counted as given).
    pub fn m(&self) -> usize {
        self.base.m() + self.extra.len()
    }

    pub fn adjacency(&self) -> WeightedAdj {
        let base = self.base.edges().map(|(u, v)| (u, v, 1));
        WeightedAdj::from_edges(self.base.n(), base.chain(self.extra.iter().copied()))
    }
}

/// Compact weighted adjacency (CSR). Parallel edges keep the lightest weight.
#[derive(Debug, Clone)]
pub struct WeightedAdj {
    offsets: Vec<usize>,
    targets: Vec<(u32, Dist)>,
}

impl WeightedAdj {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32, Dist)>) -> Self {
        let mut lists: Vec<Vec<(u32, Dist)>> = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u == v {
                continue;
            }
            lists[u as usize].push((v, w));
            lists[v as usize].push((u, w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup_by_key(|e| e.0);
            targets.extend_from_slice(l);
            offsets.push(targets.len());
        }
        WeightedAdj { offsets, targets }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(u32, Dist)] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Undirected edge count after merging parallel edges.
    pub fn m(&self) -> usize {
        self.targets.len() / 2
    }
}

/// Minimum weight over paths from `source` with at most `hop_bound` edges.
///
/// Jacobi-style Bellman-Ford: round `r` only reads values from round `r-1`,
/// so the result is exactly the hop-bounded distance. Only vertices that
/// improved in the previous round are relaxed, and the loop ends early once
/// nothing changes.
pub fn hop_bounded_from(adj: &WeightedAdj, source: usize, hop_bound: u64) -> Vec<Dist> {
    let n = adj.n();
    let mut cur = vec![INF; n];
    cur[source] = 0;
    let mut next = cur.clone();
    let mut frontier = vec![source as u32];
    let mut changed = Vec::new();
    let mut in_changed = vec![false; n];
    let mut round = 0u64;
    while round < hop_bound && !frontier.is_empty() {
        for &u in &frontier {
            let du = cur[u as usize];
            for &(w, wt) in adj.neighbors(u as usize) {
                let cand = dist_add(du, wt);
                if cand < next[w as usize] {
                    next[w as usize] = cand;
                    if !in_changed[w as usize] {
                        in_changed[w as usize] = true;
                        changed.push(w);
                    }
                }
            }
        }
        for &w in &changed {
            cur[w as usize] = next[w as usize];
            in_changed[w as usize] = false;
        }
        std::mem::swap(&mut frontier, &mut changed);
        changed.clear();
        round += 1;
    }
    cur
}

/// Hop-bounded distances in `G ∪ H` from every source, in the given order.
pub fn hop_bounded_distances(gv: &WeightedGraphView, sources: &[u32], hop_bound: u64) -> Result<Vec<Vec<Dist>>> {
    let n = gv.base.n();
    if let Some(&s) = sources.iter().find(|&&s| s as usize >= n) {
        return Err(Error::Argument(format!("source {s} out of range")));
    }
    let adj = gv.adjacency();
    Ok(sources.iter().map(|&s| hop_bounded_from(&adj, s as usize, hop_bound)).collect())
}

/// Single-source shortest paths on a weighted adjacency.
pub fn dijkstra(adj: &WeightedAdj, source: usize) -> Vec<Dist> {
    let mut dist = vec![INF; adj.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source as u32)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for &(w, wt) in adj.neighbors(u as usize) {
            let cand = dist_add(d, wt);
            if cand < dist[w as usize] {
                dist[w as usize] = cand;
                heap.push(Reverse((cand, w)));
            }
        }
    }
    dist
}
