//! Functional stand-ins for the congested-clique primitives the pipelines
//! consume. Results are computed centrally; rounds are charged to the ledger.

use crate::graph::{hop_bounded_distances, DistanceOracle, WeightedGraphView};
use crate::ledger::RoundLedger;
use crate::rng::SeedStream;
use crate::{dist_add, Dist, Error, Result, INF};
use rand::Rng;
use std::collections::BTreeSet;

/// Hop-bounded distances from each source to every vertex.
#[derive(Debug, Clone)]
pub struct SourceDetection {
    sources: Vec<u32>,
    slot: Vec<Option<u32>>,
    dist: Vec<Vec<Dist>>,
}

impl SourceDetection {
    pub fn sources(&self) -> &[u32] {
        &self.sources
    }

    /// Distance from `source` to `v`, `None` if `source` is not a source or
    /// is not reached within the hop bound.
    pub fn get(&self, v: usize, source: u32) -> Option<Dist> {
        let i = (*self.slot.get(source as usize)?)? as usize;
        let x = self.dist[i][v];
        (x != INF).then_some(x)
    }

    /// Sources detected by `v`, in source order.
    pub fn detected(&self, v: usize) -> impl Iterator<Item = (u32, Dist)> + '_ {
        self.sources.iter().zip(&self.dist).filter_map(move |(&s, row)| (row[v] != INF).then_some((s, row[v])))
    }

    /// Full row of one source (`INF` where undetected).
    pub fn from_source(&self, source: u32) -> Option<&[Dist]> {
        let i = (*self.slot.get(source as usize)?)? as usize;
        Some(&self.dist[i])
    }
}

/// `(S, d)`-source detection on `G ∪ H`: exact distances over paths with at
/// most `d` hops, from every source in `sources`.
pub fn source_detection(gv: &WeightedGraphView, sources: &[u32], d: u64, ledger: &mut RoundLedger) -> Result<SourceDetection> {
    if d == 0 {
        return Err(Error::param("d", "hop bound must be at least 1"));
    }
    let n = gv.base.n();
    let mut uniq: Vec<u32> = sources.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let dist = hop_bounded_distances(gv, &uniq, d)?;
    let mut slot = vec![None; n];
    for (i, &s) in uniq.iter().enumerate() {
        slot[s as usize] = Some(i as u32);
    }
    ledger.charge_source_detection(gv.m() as f64, uniq.len() as f64, d as f64);
    Ok(SourceDetection { sources: uniq, slot, dist })
}

/// `min_{w ∈ W_u ∩ W_v} δ(u,w) + δ(w,v)` for every pair; `INF` when the
/// witness sets are disjoint. `delta(v, w)` must be defined for `w ∈ W_v`.
pub fn distance_through_sets(
    witnesses: &[Vec<u32>],
    delta: impl Fn(u32, u32) -> Option<Dist>,
    ledger: &mut RoundLedger,
) -> Result<DistanceOracle> {
    let n = witnesses.len();
    // holders[w] = (v, δ(v,w)) for every v that declares w
    let mut holders: Vec<Vec<(u32, Dist)>> = vec![Vec::new(); n];
    let mut total = 0usize;
    for (v, ws) in witnesses.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for &w in ws {
            if w as usize >= n {
                return Err(Error::Argument(format!("witness {w} out of range")));
            }
            if !seen.insert(w) {
                continue;
            }
            let x = delta(v as u32, w)
                .ok_or_else(|| Error::Contract(format!("no estimate for declared witness {w} of vertex {v}")))?;
            holders[w as usize].push((v as u32, x));
        }
        total += seen.len();
    }
    let mut out = DistanceOracle::filled(n, INF);
    for list in &holders {
        for &(u, du) in list {
            for &(v, dv) in list {
                let cand = dist_add(du, dv);
                if cand < out.get(u as usize, v as usize) {
                    out.set(u as usize, v as usize, cand);
                }
            }
        }
    }
    ledger.charge_distance_through(if n == 0 { 0.0 } else { total as f64 / n as f64 });
    Ok(out)
}

/// Holders with the target sets they need hit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HittingSetInstance {
    pub n: usize,
    pub k: usize,
    pub holders: Vec<(u32, Vec<u32>)>,
}

impl HittingSetInstance {
    pub fn new(n: usize, k: usize, holders: Vec<(u32, Vec<u32>)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        for (v, s) in &holders {
            if s.len() < k {
                return Err(Error::Argument(format!("holder {v} has {} targets, fewer than k={k}", s.len())));
            }
            if s.iter().any(|&x| x as usize >= n) {
                return Err(Error::Argument(format!("holder {v} has a target out of range")));
            }
        }
        Ok(HittingSetInstance { n, k, holders })
    }
}

/// Inclusion probability `min(1, c·ln n / k)`.
pub fn hitting_probability(n: usize, k: usize, c: f64) -> f64 {
    (c * (n.max(2) as f64).ln() / k as f64).min(1.0)
}

/// Includes each vertex independently with probability `min(1, c·ln n/k)`.
pub fn random_hitting_set(inst: &HittingSetInstance, c: f64, stream: &SeedStream, label: &str, ledger: &mut RoundLedger) -> Result<Vec<u32>> {
    if c <= 2.0 {
        return Err(Error::param("c", format!("{c} must exceed 2")));
    }
    let p = hitting_probability(inst.n, inst.k, c);
    let mut rng = stream.rng(label);
    let a = (0..inst.n as u32).filter(|_| rng.random_bool(p)).collect();
    ledger.charge_flat("hitting_set_announce", 1.0);
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HitReport {
    /// Holders whose target set misses `A`.
    pub misses: Vec<u32>,
    pub size: usize,
}

pub fn verify_hitting_set(inst: &HittingSetInstance, a: &[u32]) -> HitReport {
    let mut member = vec![false; inst.n];
    for &x in a {
        member[x as usize] = true;
    }
    let misses = inst
        .holders
        .iter()
        .filter(|(_, s)| !s.iter().any(|&x| member[x as usize]))
        .map(|(v, _)| *v)
        .collect();
    HitReport { misses, size: a.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{exact_apsp, generate, Graph, GraphSpec};
    use proptest::prelude::*;
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};

    fn path4() -> Graph {
        generate(&GraphSpec::Path { n: 4 }, 0).unwrap()
    }

    #[test]
    fn path_source_detection() {
        let g = path4();
        let gv = WeightedGraphView::unweighted(&g);
        let mut l = RoundLedger::unit(4);
        let r = source_detection(&gv, &[0, 3], 2, &mut l).unwrap();
        assert_eq!(r.detected(1).collect::<Vec<_>>(), vec![(0, 1), (3, 2)]);
        assert_eq!(r.detected(0).collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(r.get(0, 3), None);
        let r = source_detection(&gv, &[0, 3], 1, &mut l).unwrap();
        assert_eq!(r.detected(1).collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(r.get(3, 3), Some(0));
        assert!(source_detection(&gv, &[0], 0, &mut l).is_err());
    }

    #[test]
    fn empty_source_set_is_free() {
        let g = path4();
        let mut l = RoundLedger::unit(4);
        let r = source_detection(&WeightedGraphView::unweighted(&g), &[], 3, &mut l).unwrap();
        assert!(r.sources().is_empty());
        assert_eq!(l.total(), 0.0);
    }

    #[test]
    fn full_hops_equal_exact_distances() {
        let g = generate(&GraphSpec::gnp(60, 0.06), 3).unwrap();
        let exact = exact_apsp(&g, 100).unwrap();
        let mut l = RoundLedger::unit(60);
        let sources = [0, 7, 19, 59];
        let r = source_detection(&WeightedGraphView::unweighted(&g), &sources, 59, &mut l).unwrap();
        for &s in &sources {
            for v in 0..60 {
                let want = exact.get(s as usize, v);
                assert_eq!(r.get(v, s), (want != INF).then_some(want));
            }
        }
    }

    #[test]
    fn distance_through_examples() {
        let mut l = RoundLedger::unit(4);
        let delta = |v: u32, w: u32| match (v, w) {
            (0, 2) => Some(2),
            (1, 2) => Some(3),
            (0, 3) => Some(1),
            (1, 3) => Some(1),
            (x, y) if x == y => Some(0),
            _ => None,
        };
        let single = distance_through_sets(&[vec![2], vec![2], vec![], vec![]], delta, &mut l).unwrap();
        assert_eq!(single.get(0, 1), 5);
        assert_eq!(single.get(0, 2), INF);
        let two = distance_through_sets(&[vec![2, 3], vec![2, 3], vec![], vec![]], delta, &mut l).unwrap();
        assert_eq!(two.get(0, 1), 2);
        let disjoint = distance_through_sets(&[vec![2], vec![3], vec![], vec![]], delta, &mut l).unwrap();
        assert_eq!(disjoint.get(0, 1), INF);
        assert!(matches!(
            distance_through_sets(&[vec![1], vec![], vec![], vec![]], delta, &mut l),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn hitting_set_clamp_and_determinism() {
        let inst = HittingSetInstance::new(50, 3, vec![(0, vec![1, 2, 3]), (1, vec![4, 5, 6])]).unwrap();
        let mut l = RoundLedger::unit(50);
        let s = SeedStream::new(1);
        let a = random_hitting_set(&inst, 3.0, &s, "hit", &mut l).unwrap();
        assert_eq!(a.len(), 50);
        assert!(verify_hitting_set(&inst, &a).misses.is_empty());
        let big = HittingSetInstance::new(500, 400, vec![(0, (0..500).collect())]).unwrap();
        let x = random_hitting_set(&big, 3.0, &s, "hit", &mut l).unwrap();
        assert_eq!(x, random_hitting_set(&big, 3.0, &s, "hit", &mut l).unwrap());
        assert!(x.len() < 500);
        assert!(random_hitting_set(&big, 2.0, &s, "hit", &mut l).is_err());
        assert!(HittingSetInstance::new(5, 3, vec![(0, vec![1])]).is_err());
    }

    #[test]
    fn verify_extremes() {
        let inst = HittingSetInstance::new(4, 1, vec![(0, vec![1]), (2, vec![3, 0])]).unwrap();
        assert!(verify_hitting_set(&inst, &[0, 1, 2, 3]).misses.is_empty());
        assert_eq!(verify_hitting_set(&inst, &[]).misses, vec![0, 2]);
    }

    fn random_instance(n: usize, k: usize, holders: usize, seed: u64) -> HittingSetInstance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let hs = (0..holders).map(|v| (v as u32, sample(&mut rng, n, k).into_iter().map(|x| x as u32).collect())).collect();
        HittingSetInstance::new(n, k, hs).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn verify_matches_intersection_scan(seed in 0u64..1000, pick in proptest::collection::vec(0u32..40, 0..12)) {
            let inst = random_instance(40, 4, 15, seed);
            let rep = verify_hitting_set(&inst, &pick);
            for (v, s) in &inst.holders {
                let hit = s.iter().any(|x| pick.contains(x));
                prop_assert_eq!(!hit, rep.misses.contains(v));
            }
        }

        #[test]
        fn distance_through_monotone_under_shrinking(seed in 0u64..1000, drop in 0usize..6) {
            let n = 6;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let est: Vec<Dist> = (0..n * n).map(|_| rng.random_range(1..10)).collect();
            let delta = |v: u32, w: u32| Some(est[v as usize * n + w as usize]);
            let full: Vec<Vec<u32>> = (0..n).map(|_| (0..n as u32).filter(|_| rng.random_bool(0.6)).collect()).collect();
            let mut shrunk = full.clone();
            let half = shrunk[drop].len() / 2;
            shrunk[drop].truncate(half);
            let mut l = RoundLedger::unit(n);
            let a = distance_through_sets(&full, delta, &mut l).unwrap();
            let b = distance_through_sets(&shrunk, delta, &mut l).unwrap();
            for u in 0..n {
                for v in 0..n {
                    prop_assert!(b.get(u, v) >= a.get(u, v));
                    let brute = full[u].iter().filter(|w| full[v].contains(w))
                        .map(|&w| delta(u as u32, w).unwrap() + delta(v as u32, w).unwrap()).min().unwrap_or(INF);
                    prop_assert_eq!(a.get(u, v), brute);
                }
            }
        }
    }
}
