//! Unweighted undirected graphs, generators and edge-list I/O.

mod generate;
mod oracle;
mod weighted;

pub use generate::{generate, GraphSpec};
pub use oracle::{bfs_ball, bfs_from, exact_apsp, BfsScratch, DistanceOracle, DEFAULT_ORACLE_CAP};
pub use weighted::{dijkstra, hop_bounded_distances, hop_bounded_from, WeightedAdj, WeightedGraphView};

use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Simple undirected graph on vertices `0..n`, stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    nbrs: Vec<u32>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges are merged; self-loops
    /// and out-of-range ids are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize - 1 {
            return Err(Error::Capacity(format!("{n} vertices")));
        }
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Argument(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::Argument(format!("self-loop at {u}")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        Ok(Self::from_lists(adj))
    }

    fn from_lists(mut adj: Vec<Vec<u32>>) -> Graph {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        offsets.push(0);
        let mut nbrs = Vec::new();
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            nbrs.extend_from_slice(list);
            offsets.push(nbrs.len());
        }
        Graph { offsets, nbrs }
    }

    pub fn empty(n: usize) -> Graph {
        Graph { offsets: vec![0; n + 1], nbrs: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.nbrs.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.nbrs[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u).iter().filter(move |&&v| (v as usize) > u).map(move |&v| (u as u32, v))
        })
    }

    /// Subgraph on the same vertex set keeping edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(u32, u32) -> bool) -> Graph {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); self.n()];
        for (u, v) in self.edges() {
            if keep(u, v) {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        Self::from_lists(adj)
    }

    /// Checks symmetry, sortedness, and absence of loops and duplicates.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        for v in 0..n {
            let ns = self.neighbors(v);
            for w in ns.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Contract(format!("adjacency of {v} not strictly sorted")));
                }
            }
            for &u in ns {
                if u as usize >= n || u as usize == v {
                    return Err(Error::Contract(format!("bad neighbour {u} of {v}")));
                }
                if !self.has_edge(u as usize, v) {
                    return Err(Error::Contract(format!("edge {v}-{u} not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Writes the graph as an edge list, one `u v` per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# n={} m={}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }
}

/// Maps external vertex labels to dense ids, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    pub labels: Vec<String>,
}

impl LabelTable {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            let _ = writeln!(s, "{i} {l}");
        }
        s
    }
}

/// Parses whitespace-separated `u v` lines; `#` starts a comment. Labels are
/// arbitrary tokens. A `# n=<count>` header, when present, adds isolated
/// vertices so that numeric dumps round-trip.
pub fn parse_edge_list(text: &str) -> Result<(Graph, LabelTable)> {
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut labels = LabelTable::default();
    let mut edges = Vec::new();
    let mut declared_n: Option<usize> = None;
    let mut intern = |tok: &str, labels: &mut LabelTable| -> usize {
        if let Some(&i) = ids.get(tok) {
            return i;
        }
        let i = labels.labels.len();
        ids.insert(tok.to_string(), i);
        labels.labels.push(tok.to_string());
        i
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let (body, comment) = match raw.find('#') {
            Some(i) => (&raw[..i], Some(&raw[i + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            for tok in c.split_whitespace() {
                if let Some(v) = tok.strip_prefix("n=") {
                    declared_n = v.parse().ok();
                }
            }
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks.len() {
            0 => continue,
            2 => {
                if toks[0] == toks[1] {
                    return Err(Error::Parse { line: line_no, msg: format!("self-loop on `{}`", toks[0]) });
                }
                let u = intern(toks[0], &mut labels);
                let v = intern(toks[1], &mut labels);
                edges.push((u, v));
            }
            k => {
                return Err(Error::Parse { line: line_no, msg: format!("expected 2 fields, found {k}") });
            }
        }
    }
    // Numeric dumps with isolated vertices: pad with the missing ids so that
    // labels stay aligned with the original numbering.
    if let Some(n) = declared_n {
        let numeric = labels.labels.iter().all(|l| l.parse::<usize>().map(|x| x < n).unwrap_or(false));
        if numeric {
            let mut remap = vec![0usize; labels.labels.len()];
            for (i, l) in labels.labels.iter().enumerate() {
                remap[i] = l.parse().unwrap();
            }
            let edges = edges.into_iter().map(|(u, v)| (remap[u], remap[v]));
            let g = Graph::from_edges(n, edges)?;
            let labels = LabelTable { labels: (0..n).map(|i| i.to_string()).collect() };
            return Ok((g, labels));
        }
    }
    let n = labels.labels.len();
    Ok((Graph::from_edges(n, edges)?, labels))
}

pub fn load_edge_list(path: &std::path::Path) -> Result<(Graph, LabelTable)> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_dedups_and_sorts() {
        let g = Graph::from_edges(4, [(2, 1), (1, 2), (0, 3), (3, 1)]).unwrap();
        assert_eq!(g.m(), 3);
        assert_eq!(g.neighbors(1), &[2, 3]);
        assert_eq!(g.neighbors(3), &[0, 1]);
        g.check_invariants().unwrap();
    }

    #[test]
    fn rejects_loops_and_out_of_range() {
        assert!(Graph::from_edges(3, [(1, 1)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn parses_labels_comments_and_duplicates() {
        let text = "# a comment\nx y\ny z  # trailing\n\ny x\n";
        let (g, labels) = parse_edge_list(text).unwrap();
        assert_eq!(labels.labels, vec!["x", "y", "z"]);
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 2);
    }

    #[test]
    fn parse_error_reports_line() {
        match parse_edge_list("0 1\n1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_edge_list("0 1\n\n4 4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edge_list_round_trip_keeps_isolated_vertices() {
        let g = Graph::from_edges(6, [(0, 5), (2, 3)]).unwrap();
        let (h, _) = parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, h);
    }
}
