//! Desk-scale simulation of congested-clique shortest-path algorithms.
//!
//! The crate is organised bottom-up: [`graph`] holds the input graphs and the
//! exact oracles everything is checked against, [`ledger`] charges simulated
//! rounds, [`minplus`] and [`primitives`] provide the building blocks, and
//! [`softhit`], [`hopset`], [`emulator`] and [`apps`] build the actual
//! constructions on top of them.

pub mod apps;
pub mod emulator;
pub mod error;
pub mod graph;
pub mod hopset;
pub mod ledger;
pub mod minplus;
pub mod primitives;
pub mod rng;
pub mod softhit;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Distance value. `INF` is the absorbing element of the min-plus semiring.
pub type Dist = u32;

/// Sentinel for "unreachable".
pub const INF: Dist = Dist::MAX;

/// Saturating addition: anything involving `INF` stays `INF`.
#[inline]
pub fn dist_add(a: Dist, b: Dist) -> Dist {
    a.saturating_add(b)
}

/// Whether a construction may use randomness or must be deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Randomness {
    Randomized,
    Deterministic,
}

/// `⌈log₂ x⌉` for `x ≥ 1`; 0 for `x ≤ 1`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// The "log n" used in thresholds: `⌈log₂ n⌉`, at least 1.
pub fn log_n(n: usize) -> u32 {
    ceil_log2(n as u64).max(1)
}

/// Buckets of width 0.05 over the stretch `δ/d`, starting at 1; the last
/// bucket collects everything from 3 up.
pub const STRETCH_BUCKETS: usize = 41;

pub fn stretch_bucket(ratio: f64) -> usize {
    (((ratio - 1.0) / 0.05 + 1e-9).floor().max(0.0) as usize).min(STRETCH_BUCKETS - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_small_values() {
        assert_eq!(ceil_log2(0), 0);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1 << 40), 40);
        assert_eq!(ceil_log2((1 << 40) + 1), 41);
    }

    #[test]
    fn dist_add_saturates() {
        assert_eq!(dist_add(3, 4), 7);
        assert_eq!(dist_add(INF, 0), INF);
        assert_eq!(dist_add(INF - 1, 5), INF);
    }

    #[test]
    fn stretch_buckets() {
        assert_eq!(stretch_bucket(1.0), 0);
        assert_eq!(stretch_bucket(1.05), 1);
        assert_eq!(stretch_bucket(2.99), 39);
        assert_eq!(stretch_bucket(3.0), STRETCH_BUCKETS - 1);
        assert_eq!(stretch_bucket(50.0), STRETCH_BUCKETS - 1);
    }
}
