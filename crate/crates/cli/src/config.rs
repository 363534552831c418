//! Experiment configuration, read from a single YAML document.

use ccsp_core::emulator::EmulatorOptions;
use ccsp_core::graph::{GraphSpec, DEFAULT_ORACLE_CAP};
use ccsp_core::ledger::CostModel;
use ccsp_core::softhit::HashFamilyConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Emulator,
    Hopset,
    Knearest,
    Softhit,
    ApspAdditive,
    Mssp,
    #[serde(rename = "apsp-2eps")]
    Apsp2Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Ideal,
    Clique,
    CliqueWhp,
    Deterministic,
    Randomized,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON report; printed to stdout when unset.
    pub report: Option<PathBuf>,
    /// Stretch histogram for `run`, size series for `sweep`.
    pub csv: Option<PathBuf>,
    /// Emulator or hopset edge list of the first repetition.
    pub dump: Option<PathBuf>,
    /// Input graph of the first repetition as an edge list.
    pub graph: Option<PathBuf>,
    /// Round ledger of the first repetition as CSV.
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnearestConfig {
    pub k: usize,
    pub d: u64,
}

impl Default for KnearestConfig {
    fn default() -> Self {
        KnearestConfig { k: 4, d: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HopsetConfig {
    pub t: u64,
}

impl Default for HopsetConfig {
    fn default() -> Self {
        HopsetConfig { t: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SofthitConfig {
    /// Read the instance from JSON instead of generating one.
    pub instance: Option<PathBuf>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Delta")]
    pub delta: usize,
    pub holders: usize,
    /// Sets get `Δ + U{0..=extra}` elements.
    pub extra: usize,
    pub hash: HashFamilyConfig,
    pub c_size: f64,
    pub c_mass: f64,
}

impl Default for SofthitConfig {
    fn default() -> Self {
        SofthitConfig {
            instance: None,
            n: 256,
            delta: 8,
            holders: 64,
            extra: 8,
            hash: HashFamilyConfig::default(),
            c_size: 8.0,
            c_mass: 8.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsspConfig {
    /// Number of sources, spread evenly over the ids; `⌈√n⌉` when unset.
    pub sources: Option<usize>,
    pub source_cap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n: Vec<usize>,
    /// Also run the verifier on every sweep point.
    pub verify: bool,
}

fn default_eps() -> f64 {
    0.5
}

fn default_reps() -> usize {
    1
}

fn default_cap() -> usize {
    DEFAULT_ORACLE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub algorithm: Algorithm,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_cap")]
    pub oracle_cap: usize,
    #[serde(default)]
    pub cost_model: CostModel,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub knearest: KnearestConfig,
    #[serde(default)]
    pub hopset: HopsetConfig,
    #[serde(default)]
    pub softhit: SofthitConfig,
    #[serde(default)]
    pub mssp: MsspConfig,
    #[serde(default)]
    pub emulator: EmulatorOptions,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Syntax { path: String, msg: String },
}

/// Parses `text`; errors name the file and, through the YAML parser, the
/// offending key path, line and column.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    serde_yaml::from_str(text).map_err(|e| ConfigError::Syntax { path: origin.to_string(), msg: e.to_string() })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: origin.clone(), source })?;
    parse_config(&text, &origin)
}
