use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use vstat::SolverOptions;

use crate::output::LogBase;
use crate::CliError;

/// Resolved settings: defaults, overlaid by the config file, overlaid by flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// 0 means one thread per core.
    pub threads: usize,
    pub log_base: LogBase,
    pub solver: SolverOptions,
    pub analyze: AnalyzeConfig,
    pub oracle: OracleConfig,
    pub simulate: SimulateConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Points of the `α` grid (jump locations are added on top) and of the
    /// `x` grid of the graph.
    pub grid: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self { grid: 201 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n: usize,
    pub delta: f64,
    /// Interior comparison points.
    pub grid: usize,
    /// Half-width of the neighbourhood dropped around each jump.
    pub exclusion: f64,
    /// Allowed `|oracle - reference|` in nats under `--check`.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n: 4000,
            delta: 2e-3,
            grid: 21,
            exclusion: 0.01,
            tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: Vec<usize>,
    pub seeds: usize,
    /// `U` is skipped once `n^r` exceeds this.
    pub u_budget: f64,
    /// Largest allowed median error at the largest `n` under `--check`.
    pub tolerance: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n: vec![1_000, 10_000, 100_000],
            seeds: 16,
            u_budget: 1e6,
            tolerance: 5e-3,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let cfg =
            toml::from_str(&text).map_err(|e| CliError::Invalid(format!("bad config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serializing the configuration")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let cfg = Config::default();
        let back: Config = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back.oracle.n, 4000);
        assert_eq!(back.simulate.n, vec![1_000, 10_000, 100_000]);
        assert_eq!(back.log_base, LogBase::E);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: Config = toml::from_str("[oracle]\nn = 500\n").unwrap();
        assert_eq!(cfg.oracle.n, 500);
        assert_eq!(cfg.oracle.delta, 2e-3);
        assert_eq!(cfg.solver.random_starts, 32);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("bogus = 1\n").is_err());
    }
}
