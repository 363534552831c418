//! Simulated round accounting.
//!
//! Nothing here simulates messages. Each primitive charges the round count
//! its cost theorem predicts, with a configurable leading constant, so that
//! scaling behaviour can be audited from the log.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Leading constants per primitive. All default to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub source_detection: f64,
    pub filtered_mm: f64,
    pub sparse_mm: f64,
    pub distance_through: f64,
    pub broadcast_learn: f64,
    pub flat: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            source_detection: 1.0,
            filtered_mm: 1.0,
            sparse_mm: 1.0,
            distance_through: 1.0,
            broadcast_learn: 1.0,
            flat: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("source_detection", self.source_detection),
            ("filtered_mm", self.filtered_mm),
            ("sparse_mm", self.sparse_mm),
            ("distance_through", self.distance_through),
            ("broadcast_learn", self.broadcast_learn),
            ("flat", self.flat),
        ];
        for (name, c) in fields {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::param(&format!("cost_model.{name}"), format!("{c} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// Slash-separated path of the enclosing pipeline stages.
    pub scope: String,
    pub primitive: String,
    pub params: BTreeMap<String, f64>,
    pub rounds: f64,
}

/// Append-only log of charged rounds for one pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct RoundLedger {
    n: usize,
    model: CostModel,
    entries: Vec<LedgerEntry>,
    #[serde(skip)]
    scope: Vec<String>,
}

impl RoundLedger {
    pub fn new(n: usize, model: CostModel) -> Self {
        RoundLedger { n, model, entries: Vec::new(), scope: Vec::new() }
    }

    pub fn unit(n: usize) -> Self {
        Self::new(n, CostModel::default())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    /// Message word size in bits, `⌈log₂ n⌉`.
    pub fn word_bits(&self) -> u32 {
        crate::log_n(self.n)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.rounds).sum()
    }

    /// Runs `f` with `name` pushed onto the scope path.
    pub fn scoped<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scope.push(name.to_string());
        let out = f(self);
        self.scope.pop();
        out
    }

    /// Rounds summed per primitive name.
    pub fn by_primitive(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.primitive.clone()).or_insert(0.0) += e.rounds;
        }
        m
    }

    /// Rounds summed per top-level scope.
    pub fn by_scope(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            let top = e.scope.split('/').next().unwrap_or("").to_string();
            *m.entry(top).or_insert(0.0) += e.rounds;
        }
        m
    }

    fn push(&mut self, primitive: &str, params: &[(&str, f64)], rounds: f64) -> f64 {
        self.entries.push(LedgerEntry {
            scope: self.scope.join("/"),
            primitive: primitive.to_string(),
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            rounds,
        });
        rounds
    }

    fn nf(&self) -> f64 {
        self.n.max(1) as f64
    }

    /// `(m^{1/3} s^{2/3} / n + 1) · d`; zero when there is nothing to detect.
    pub fn charge_source_detection(&mut self, m: f64, s: f64, d: f64) -> f64 {
        let rounds = if s <= 0.0 || d <= 0.0 {
            0.0
        } else {
            self.model.source_detection * (m.cbrt() * s.powf(2.0 / 3.0) / self.nf() + 1.0) * d
        };
        self.push("source_detection", &[("m", m), ("s", s), ("d", d)], rounds)
    }

    /// `(ρ_S ρ_T ρ)^{1/3} / n^{2/3} + log₂ W`.
    pub fn charge_filtered_mm(&mut self, rho_s: f64, rho_t: f64, rho: f64, w_values: f64) -> f64 {
        let log_w = if w_values > 1.0 { w_values.log2() } else { 0.0 };
        let rounds = self.model.filtered_mm * ((rho_s * rho_t * rho).cbrt() / self.nf().powf(2.0 / 3.0) + log_w);
        self.push("filtered_mm", &[("rho_s", rho_s), ("rho_t", rho_t), ("rho", rho), ("w", w_values)], rounds)
    }

    /// `(ρ_S ρ_T)^{1/3} / n^{1/3} + 1`.
    pub fn charge_sparse_mm(&mut self, rho_s: f64, rho_t: f64) -> f64 {
        let rounds = self.model.sparse_mm * ((rho_s * rho_t).cbrt() / self.nf().cbrt() + 1.0);
        self.push("sparse_mm", &[("rho_s", rho_s), ("rho_t", rho_t)], rounds)
    }

    /// `ρ^{2/3} / n^{1/3} + 1`.
    pub fn charge_distance_through(&mut self, rho: f64) -> f64 {
        let rounds = self.model.distance_through * (rho.powf(2.0 / 3.0) / self.nf().cbrt() + 1.0);
        self.push("distance_through", &[("rho", rho)], rounds)
    }

    /// Gather plus scatter: `2 ⌈words / n⌉`.
    pub fn charge_broadcast_learn(&mut self, total_words: f64) -> f64 {
        let per = (total_words / self.nf()).ceil().max(0.0);
        let rounds = self.model.broadcast_learn * 2.0 * per;
        self.push("broadcast_learn", &[("words", total_words)], rounds)
    }

    pub fn charge_flat(&mut self, name: &str, rounds: f64) -> f64 {
        let rounds = self.model.flat * rounds.max(0.0);
        self.push(name, &[], rounds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("ledger entries serialize")
    }

    /// CSV: `index,scope,primitive,rounds,params` with params as `k=v;k=v`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,scope,primitive,rounds,params\n");
        for (i, e) in self.entries.iter().enumerate() {
            let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "{i},{},{},{},{}", e.scope, e.primitive, e.rounds, params.join(";"));
        }
        s
    }
}
