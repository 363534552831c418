use super::{load_edge_list, Graph};
use crate::rng::SeedStream;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Graph families understood by [`generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Erdős–Rényi G(n, p). `avg_degree` may be given instead of `p`.
    Gnp {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        avg_degree: Option<f64>,
    },
    Path { n: usize },
    Cycle { n: usize },
    Grid { w: usize, h: usize },
    Complete { n: usize },
    Star { n: usize },
    /// Two cliques of size `clique` joined by a path with `bridge` inner vertices.
    Barbell { clique: usize, bridge: usize },
    EdgeList { path: PathBuf },
}

impl GraphSpec {
    pub fn gnp(n: usize, p: f64) -> Self {
        GraphSpec::Gnp { n, p: Some(p), avg_degree: None }
    }

    /// Vertex count, when known without reading a file.
    pub fn n(&self) -> Option<usize> {
        Some(match *self {
            GraphSpec::Gnp { n, .. }
            | GraphSpec::Path { n }
            | GraphSpec::Cycle { n }
            | GraphSpec::Complete { n }
            | GraphSpec::Star { n } => n,
            GraphSpec::Grid { w, h } => w * h,
            GraphSpec::Barbell { clique, bridge } => 2 * clique + bridge,
            GraphSpec::EdgeList { .. } => return None,
        })
    }

    /// Same family at a different size (used by sweeps).
    pub fn with_n(&self, n: usize) -> Result<GraphSpec> {
        Ok(match self {
            GraphSpec::Gnp { p, avg_degree, .. } => GraphSpec::Gnp { n, p: *p, avg_degree: *avg_degree },
            GraphSpec::Path { .. } => GraphSpec::Path { n },
            GraphSpec::Cycle { .. } => GraphSpec::Cycle { n },
            GraphSpec::Complete { .. } => GraphSpec::Complete { n },
            GraphSpec::Star { .. } => GraphSpec::Star { n },
            GraphSpec::Grid { .. } => {
                let w = (n as f64).sqrt().round().max(1.0) as usize;
                GraphSpec::Grid { w, h: n.div_ceil(w) }
            }
            GraphSpec::Barbell { bridge, .. } => GraphSpec::Barbell { clique: n.saturating_sub(*bridge) / 2, bridge: *bridge },
            GraphSpec::EdgeList { .. } => return Err(Error::Argument("edge-list graphs cannot be resized".into())),
        })
    }

    pub fn label(&self) -> String {
        match self {
            GraphSpec::Gnp { n, p, avg_degree } => match (p, avg_degree) {
                (Some(p), _) => format!("gnp(n={n},p={p})"),
                (None, Some(d)) => format!("gnp(n={n},deg={d})"),
                _ => format!("gnp(n={n})"),
            },
            GraphSpec::Path { n } => format!("path({n})"),
            GraphSpec::Cycle { n } => format!("cycle({n})"),
            GraphSpec::Grid { w, h } => format!("grid({w}x{h})"),
            GraphSpec::Complete { n } => format!("complete({n})"),
            GraphSpec::Star { n } => format!("star({n})"),
            GraphSpec::Barbell { clique, bridge } => format!("barbell({clique},{bridge})"),
            GraphSpec::EdgeList { path } => format!("file({})", path.display()),
        }
    }
}

/// Deterministic for fixed `(spec, seed)`.
pub fn generate(spec: &GraphSpec, seed: u64) -> Result<Graph> {
    match *spec {
        GraphSpec::Gnp { n, p, avg_degree } => {
            let p = match (p, avg_degree) {
                (Some(p), None) => p,
                (None, Some(d)) => {
                    if n < 2 {
                        0.0
                    } else {
                        (d / (n - 1) as f64).min(1.0)
                    }
                }
                _ => return Err(Error::param("graph", "gnp needs exactly one of `p` or `avg_degree`")),
            };
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param("p", format!("{p} not in [0,1]")));
            }
            let mut rng = SeedStream::new(seed).rng("graph/gnp");
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, edges)
        }
        GraphSpec::Path { n } => Graph::from_edges(n, (1..n).map(|i| (i - 1, i))),
        GraphSpec::Cycle { n } => {
            if n < 3 {
                return Err(Error::param("n", "a cycle needs at least 3 vertices"));
            }
            Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
        }
        GraphSpec::Grid { w, h } => {
            let mut edges = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    let v = y * w + x;
                    if x + 1 < w {
                        edges.push((v, v + 1));
                    }
                    if y + 1 < h {
                        edges.push((v, v + w));
                    }
                }
            }
            Graph::from_edges(w * h, edges)
        }
        GraphSpec::Complete { n } => {
            Graph::from_edges(n, (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))))
        }
        GraphSpec::Star { n } => Graph::from_edges(n, (1..n).map(|v| (0, v))),
        GraphSpec::Barbell { clique, bridge } => {
            let n = 2 * clique + bridge;
            let mut edges = Vec::new();
            for base in [0, clique + bridge] {
                for u in 0..clique {
                    for v in (u + 1)..clique {
                        edges.push((base + u, base + v));
                    }
                }
            }
            if clique > 0 {
                // Chain: last vertex of the first clique, the bridge, first vertex of the second.
                let chain: Vec<usize> =
                    std::iter::once(clique - 1).chain(clique..clique + bridge).chain(std::iter::once(clique + bridge)).collect();
                for w in chain.windows(2) {
                    edges.push((w[0], w[1]));
                }
            }
            Graph::from_edges(n, edges)
        }
        GraphSpec::EdgeList { ref path } => Ok(load_edge_list(path)?.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_edges() {
        let g = generate(&GraphSpec::Path { n: 4 }, 0).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn gnp_zero_is_edgeless() {
        let g = generate(&GraphSpec::gnp(100, 0.0), 3).unwrap();
        assert_eq!(g.m(), 0);
        assert_eq!(g.n(), 100);
    }

    #[test]
    fn gnp_is_deterministic() {
        let a = generate(&GraphSpec::gnp(100, 0.05), 7).unwrap();
        let b = generate(&GraphSpec::gnp(100, 0.05), 7).unwrap();
        let c = generate(&GraphSpec::gnp(100, 0.05), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn family_shapes() {
        let grid = generate(&GraphSpec::Grid { w: 3, h: 4 }, 0).unwrap();
        assert_eq!(grid.n(), 12);
        assert_eq!(grid.m(), 2 * 4 + 3 * 3);
        let k = generate(&GraphSpec::Complete { n: 6 }, 0).unwrap();
        assert_eq!(k.m(), 15);
        let b = generate(&GraphSpec::Barbell { clique: 4, bridge: 2 }, 0).unwrap();
        assert_eq!(b.n(), 10);
        assert_eq!(b.m(), 6 + 6 + 3);
        let c = generate(&GraphSpec::Cycle { n: 5 }, 0).unwrap();
        assert!(c.has_edge(4, 0));
        for g in [grid, k, b, c] {
            g.check_invariants().unwrap();
        }
    }

    #[test]
    fn spec_parses_from_json() {
        let s: GraphSpec = serde_json::from_str(r#"{"kind":"gnp","n":10,"avg_degree":3.0}"#).unwrap();
        assert_eq!(s.n(), Some(10));
        assert!(serde_json::from_str::<GraphSpec>(r#"{"kind":"path","n":3,"zzz":1}"#).is_err());
    }
}
