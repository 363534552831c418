use super::Graph;
use crate::{Dist, Error, Result, INF};
use std::fmt::Write as _;

pub const DEFAULT_ORACLE_CAP: usize = 8192;

/// Exact unweighted distances from `source`.
pub fn bfs_from(g: &Graph, source: usize) -> Result<Vec<Dist>> {
    if source >= g.n() {
        return Err(Error::Argument(format!("source {source} out of range for n={}", g.n())));
    }
    let mut dist = vec![INF; g.n()];
    let mut queue = Vec::with_capacity(g.n());
    dist[source] = 0;
    queue.push(source as u32);
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head] as usize;
        head += 1;
        let du = dist[u] + 1;
        for &w in g.neighbors(u) {
            if dist[w as usize] == INF {
                dist[w as usize] = du;
                queue.push(w);
            }
        }
    }
    Ok(dist)
}

/// Reusable buffers for many truncated BFS runs on the same graph.
pub struct BfsScratch {
    dist: Vec<Dist>,
    queue: Vec<u32>,
}

impl BfsScratch {
    pub fn new(n: usize) -> Self {
        BfsScratch { dist: vec![INF; n], queue: Vec::with_capacity(n) }
    }

    /// Visits the ball of `radius` around `source` one distance layer at a
    /// time. `layer` receives the layer's distance and its vertices sorted by
    /// id, and returns `false` to stop early.
    pub fn layers(&mut self, g: &Graph, source: usize, radius: Dist, mut layer: impl FnMut(Dist, &[u32]) -> bool) {
        self.queue.clear();
        self.dist[source] = 0;
        self.queue.push(source as u32);
        let mut start = 0;
        let mut d = 0;
        loop {
            let end = self.queue.len();
            if start == end {
                break;
            }
            self.queue[start..end].sort_unstable();
            if !layer(d, &self.queue[start..end]) || d >= radius {
                break;
            }
            for i in start..end {
                let u = self.queue[i] as usize;
                for &w in g.neighbors(u) {
                    if self.dist[w as usize] == INF {
                        self.dist[w as usize] = d + 1;
                        self.queue.push(w);
                    }
                }
            }
            start = end;
            d += 1;
        }
        for &v in &self.queue {
            self.dist[v as usize] = INF;
        }
    }

    /// The closed ball of `radius`, sorted by `(distance, id)`.
    pub fn ball(&mut self, g: &Graph, source: usize, radius: Dist) -> Vec<(u32, Dist)> {
        let mut out = Vec::new();
        self.layers(g, source, radius, |d, vs| {
            out.extend(vs.iter().map(|&v| (v, d)));
            true
        });
        out
    }
}

/// Closed ball of `radius` around `source`, sorted by `(distance, id)`.
pub fn bfs_ball(g: &Graph, source: usize, radius: Dist) -> Vec<(u32, Dist)> {
    BfsScratch::new(g.n()).ball(g, source, radius)
}

/// All-pairs exact distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceOracle {
    n: usize,
    d: Vec<Dist>,
}

impl DistanceOracle {
    pub fn from_rows(rows: Vec<Vec<Dist>>) -> Self {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "distance rows must be square");
            d.extend(r);
        }
        DistanceOracle { n, d }
    }

    /// Every pair set to `value`.
    pub fn filled(n: usize, value: Dist) -> Self {
        DistanceOracle { n, d: vec![value; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, x: Dist) {
        self.d[u * self.n + v] = x;
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Dist {
        self.d[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[Dist] {
        &self.d[u * self.n..(u + 1) * self.n]
    }

    /// Largest finite distance.
    pub fn diameter(&self) -> Dist {
        self.d.iter().copied().filter(|&x| x != INF).max().unwrap_or(0)
    }

    /// CSV with one row per source; `INF` for unreachable pairs.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("source");
        for v in 0..self.n {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
        for u in 0..self.n {
            let _ = write!(s, "{u}");
            for &x in self.row(u) {
                if x == INF {
                    s.push_str(",INF");
                } else {
                    let _ = write!(s, ",{x}");
                }
            }
            s.push('\n');
        }
        s
    }
}

/// `n` BFS runs. Fails when `n` exceeds `cap`.
pub fn exact_apsp(g: &Graph, cap: usize) -> Result<DistanceOracle> {
    if g.n() > cap {
        return Err(Error::Capacity(format!("exact oracle needs n <= {cap}, got {}", g.n())));
    }
    let rows = (0..g.n()).map(|s| bfs_from(g, s)).collect::<Result<Vec<_>>>()?;
    Ok(DistanceOracle::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphSpec};

    #[test]
    fn bfs_examples() {
        let p = generate(&GraphSpec::Path { n: 4 }, 0).unwrap();
        assert_eq!(bfs_from(&p, 0).unwrap(), vec![0, 1, 2, 3]);
        let e = Graph::empty(2);
        assert_eq!(bfs_from(&e, 0).unwrap(), vec![0, INF]);
        let k4 = generate(&GraphSpec::Complete { n: 4 }, 0).unwrap();
        assert_eq!(bfs_from(&k4, 2).unwrap(), vec![1, 1, 0, 1]);
        assert!(bfs_from(&k4, 4).is_err());
    }

    #[test]
    fn apsp_examples() {
        let c6 = generate(&GraphSpec::Cycle { n: 6 }, 0).unwrap();
        assert_eq!(exact_apsp(&c6, 100).unwrap().get(0, 3), 3);
        let p5 = generate(&GraphSpec::Path { n: 5 }, 0).unwrap();
        assert_eq!(exact_apsp(&p5, 100).unwrap().get(0, 4), 4);
        assert!(matches!(exact_apsp(&p5, 4), Err(Error::Capacity(_))));
    }

    #[test]
    fn ball_is_sorted_and_truncated() {
        let g = generate(&GraphSpec::Cycle { n: 8 }, 0).unwrap();
        let b = bfs_ball(&g, 0, 2);
        assert_eq!(b, vec![(0, 0), (1, 1), (7, 1), (2, 2), (6, 2)]);
        // Scratch buffers are reset between runs.
        let mut s = BfsScratch::new(8);
        assert_eq!(s.ball(&g, 3, 1), vec![(3, 0), (2, 1), (4, 1)]);
        assert_eq!(s.ball(&g, 3, 0), vec![(3, 0)]);
    }

    #[test]
    fn csv_marks_unreachable() {
        let o = exact_apsp(&Graph::empty(2), 10).unwrap();
        assert_eq!(o.to_csv(), "source,0,1\n0,0,INF\n1,INF,0\n");
    }
}
