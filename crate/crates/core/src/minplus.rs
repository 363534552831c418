//! Min-plus linear algebra and the (k,d)-nearest solver.
//!
//! Matrices store only finite entries, row by row, sorted by column. Rows of
//! the products we care about are short (at most ρ after filtering), and a
//! dense scratch row keeps each product row linear in the work done.

use crate::graph::Graph;
use crate::ledger::RoundLedger;
use crate::{ceil_log2, dist_add, Dist, Error, Result, INF};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinPlusMatrix {
    n: usize,
    rows: Vec<Vec<(u32, Dist)>>,
}

impl MinPlusMatrix {
    /// All-`INF` matrix (the semiring zero).
    pub fn infinite(n: usize) -> Self {
        MinPlusMatrix { n, rows: vec![Vec::new(); n] }
    }

    /// Zero diagonal, `INF` elsewhere (the semiring one).
    pub fn identity(n: usize) -> Self {
        MinPlusMatrix { n, rows: (0..n).map(|i| vec![(i as u32, 0)]).collect() }
    }

    /// Adjacency with a zero diagonal and unit edges.
    pub fn adjacency(g: &Graph) -> Self {
        let rows = (0..g.n())
            .map(|v| {
                let mut r: Vec<(u32, Dist)> = g.neighbors(v).iter().map(|&w| (w, 1)).collect();
                let pos = r.partition_point(|e| (e.0 as usize) < v);
                r.insert(pos, (v as u32, 0));
                r
            })
            .collect();
        MinPlusMatrix { n: g.n(), rows }
    }

    pub fn from_dense(n: usize, entries: &[Dist]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Argument(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        let rows = entries
            .chunks(n.max(1))
            .take(n)
            .map(|row| row.iter().enumerate().filter(|e| *e.1 != INF).map(|(j, &x)| (j as u32, x)).collect())
            .collect();
        Ok(MinPlusMatrix { n, rows })
    }

    /// Builds from unsorted per-row `(column, value)` lists, keeping the
    /// minimum for repeated columns.
    pub fn from_rows(n: usize, mut rows: Vec<Vec<(u32, Dist)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::Argument(format!("expected {n} rows, got {}", rows.len())));
        }
        for r in rows.iter_mut() {
            if r.iter().any(|e| e.0 as usize >= n) {
                return Err(Error::Argument("column out of range".into()));
            }
            r.retain(|e| e.1 != INF);
            r.sort_unstable();
            r.dedup_by_key(|e| e.0);
        }
        Ok(MinPlusMatrix { n, rows })
    }

    pub fn to_dense(&self) -> Vec<Dist> {
        let mut d = vec![INF; self.n * self.n];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, x) in r {
                d[i * self.n + j as usize] = x;
            }
        }
        d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Dist {
        let r = &self.rows[i];
        match r.binary_search_by_key(&(j as u32), |e| e.0) {
            Ok(p) => r[p].1,
            Err(_) => INF,
        }
    }

    /// Finite entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(u32, Dist)] {
        &self.rows[i]
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Average number of finite entries per row.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.nnz() as f64 / self.n as f64
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, x) in r {
                rows[j as usize].push((i as u32, x));
            }
        }
        MinPlusMatrix { n: self.n, rows }
    }

    /// Entry-wise minimum.
    pub fn min_with(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut r: Vec<(u32, Dist)> = a.iter().chain(b).copied().collect();
                r.sort_unstable();
                r.dedup_by_key(|e| e.0);
                r
            })
            .collect();
        Ok(MinPlusMatrix { n: self.n, rows })
    }

    /// CSV dump, `INF` for infinite entries.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            let mut row = vec![INF; self.n];
            for &(j, x) in &self.rows[i] {
                row[j as usize] = x;
            }
            let cells: Vec<String> = row.iter().map(|&x| if x == INF { "INF".to_string() } else { x.to_string() }).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

fn check_dims(s: &MinPlusMatrix, t: &MinPlusMatrix) -> Result<()> {
    if s.n != t.n {
        return Err(Error::Argument(format!("dimension mismatch: {} vs {}", s.n, t.n)));
    }
    Ok(())
}

/// Dense accumulator for one product row.
struct RowScratch {
    acc: Vec<Dist>,
    touched: Vec<u32>,
}

impl RowScratch {
    fn new(n: usize) -> Self {
        RowScratch { acc: vec![INF; n], touched: Vec::new() }
    }

    fn accumulate(&mut self, left: &[(u32, Dist)], right: &MinPlusMatrix) {
        for &(k, a) in left {
            for &(j, b) in right.row(k as usize) {
                let v = dist_add(a, b);
                let slot = &mut self.acc[j as usize];
                if v < *slot {
                    if *slot == INF {
                        self.touched.push(j);
                    }
                    *slot = v;
                }
            }
        }
    }

    /// Drains into a `(column, value)` list and resets the scratch.
    fn drain(&mut self) -> Vec<(u32, Dist)> {
        let out = self.touched.iter().map(|&j| (j, self.acc[j as usize])).collect();
        for &j in &self.touched {
            self.acc[j as usize] = INF;
        }
        self.touched.clear();
        out
    }
}

/// `(S·T)[i,j] = min_k S[i,k] + T[k,j]`.
pub fn minplus_product(s: &MinPlusMatrix, t: &MinPlusMatrix) -> Result<MinPlusMatrix> {
    check_dims(s, t)?;
    let mut scratch = RowScratch::new(s.n);
    let rows = s
        .rows
        .iter()
        .map(|left| {
            scratch.accumulate(left, t);
            let mut r = scratch.drain();
            r.sort_unstable();
            r
        })
        .collect();
    Ok(MinPlusMatrix { n: s.n, rows })
}

/// Keeps the `rho` smallest entries of a row, ties by smaller column.
fn filter_row(row: &mut Vec<(u32, Dist)>, rho: usize) {
    if row.len() > rho {
        if rho == 0 {
            row.clear();
            return;
        }
        row.select_nth_unstable_by_key(rho - 1, |e| (e.1, e.0));
        row.truncate(rho);
    }
    row.sort_unstable();
}

/// Each row keeps its `rho` smallest finite entries (ties by column id).
pub fn filter_rows(p: &MinPlusMatrix, rho: usize) -> MinPlusMatrix {
    let rows = p
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            filter_row(&mut r, rho);
            r
        })
        .collect();
    MinPlusMatrix { n: p.n, rows }
}

/// Per-vertex `(vertex, distance)` lists sorted by `(distance, vertex)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearestTable {
    pub k: usize,
    pub d: u64,
    rows: Vec<Vec<(u32, Dist)>>,
}

impl NearestTable {
    pub fn from_rows(k: usize, d: u64, rows: Vec<Vec<(u32, Dist)>>) -> Self {
        NearestTable { k, d, rows }
    }

    fn from_matrix(k: usize, d: u64, m: &MinPlusMatrix) -> Self {
        let rows = m
            .rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.sort_unstable_by_key(|e| (e.1, e.0));
                r
            })
            .collect();
        NearestTable { k, d, rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, v: usize) -> &[(u32, Dist)] {
        &self.rows[v]
    }

    /// The table holds exactly `k` entries, so the ball may extend past it.
    pub fn is_full(&self, v: usize) -> bool {
        self.rows[v].len() >= self.k
    }

    /// Distance recorded for `u` in the row of `v`.
    pub fn lookup(&self, v: usize, u: u32) -> Option<Dist> {
        self.rows[v].iter().find(|e| e.0 == u).map(|e| e.1)
    }

    /// Whether the closed ball of radius `radius` around `v` is entirely in
    /// the table, i.e. the row is not full or its last entry lies beyond.
    pub fn covers_ball(&self, v: usize, radius: Dist) -> bool {
        let r = &self.rows[v];
        r.len() < self.k || r.last().is_some_and(|e| e.1 > radius)
    }

    /// Average row length.
    pub fn density(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.rows.iter().map(Vec::len).sum::<usize>() as f64 / self.rows.len() as f64
        }
    }
}

/// Solves (k,d)-nearest by filtered min-plus squaring.
///
/// Starts from the adjacency with a zero diagonal filtered to `k` entries per
/// row, then squares `⌈log₂ d⌉` times, clamping entries above `d` and
/// re-filtering after each product. Every vertex's row ends up holding its
/// `k` nearest vertices within distance `d` (itself included) with exact
/// distances, ties broken by id.
///
/// `d` may exceed `n`; only the charged iteration count depends on it. Once a
/// squaring leaves the matrix unchanged the remaining squarings are skipped,
/// since they would reproduce it, but they are still charged.
pub fn k_nearest_bounded(g: &Graph, k: usize, d: u64, ledger: &mut RoundLedger) -> Result<NearestTable> {
    k_nearest_traced(g, k, d, ledger, |_, _| {})
}

/// As [`k_nearest_bounded`], calling `observe(i, A_i)` after each squaring.
pub fn k_nearest_traced(
    g: &Graph,
    k: usize,
    d: u64,
    ledger: &mut RoundLedger,
    mut observe: impl FnMut(u32, &MinPlusMatrix),
) -> Result<NearestTable> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    let n = g.n();
    let clamp: Dist = d.min(n as u64) as Dist;
    let mut a = filter_rows(&MinPlusMatrix::adjacency(g), k);
    let iterations = ceil_log2(d);
    let mut scratch = RowScratch::new(n);
    let mut stable = false;
    for i in 1..=iterations {
        let rho = a.density();
        ledger.charge_filtered_mm(rho, rho, k as f64, d as f64);
        if stable {
            continue;
        }
        let rows: Vec<Vec<(u32, Dist)>> = a
            .rows
            .iter()
            .map(|left| {
                scratch.accumulate(left, &a);
                let mut r = scratch.drain();
                r.retain(|e| e.1 <= clamp);
                filter_row(&mut r, k);
                r
            })
            .collect();
        let next = MinPlusMatrix { n, rows };
        stable = next == a;
        a = next;
        observe(i, &a);
    }
    Ok(NearestTable::from_matrix(k, d, &a))
}
