//! Experiment configuration. Every field is optional in the TOML file; missing ones take the
//! desk-study defaults.

use std::path::{Path, PathBuf};

use internex_core::{InternalExchange, MarketParams, ScenarioName, SimConfig, SolverGrid, SolverSettings};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub q_min: i64,
    pub q_max: i64,
    /// Every `dump_stride`-th time level goes into the binary dump.
    pub dump_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            dt: s.dt,
            q_min: s.q_min,
            q_max: s.q_max,
            dump_stride: 100,
        }
    }
}

impl SolverConfig {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            dt: self.dt,
            q_min: self.q_min,
            q_max: self.q_max,
        }
    }

    pub fn grid(&self, market: &MarketParams, internal: &InternalExchange) -> Result<SolverGrid, CliError> {
        Ok(self.settings().grid(market, internal)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario for `solve` and `sweep`; `figures` and `tables` cover all three.
    pub scenario: ScenarioName,
    /// Client offsets for `solve` and `tables`.
    pub rho_grid: Vec<f64>,
    /// Fee paid to the dealer per unit in `solve`, `figures` and `tables`.
    pub fee: f64,
    /// Naive dealer margin in `tables`.
    pub margin: f64,
    /// Offset for the depth-vs-inventory figure data.
    pub figure_rho: f64,
    /// Offsets swept for the boundary figure.
    pub boundary_rho_grid: Vec<f64>,
    /// Offset held fixed during `sweep`.
    pub sweep_rho: f64,
    pub fee_grid: Vec<f64>,
    pub margin_grid: Vec<f64>,
    pub market: MarketParams,
    pub solver: SolverConfig,
    pub sim: SimConfig,
    /// Output root; not part of the config hash.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let five = vec![0.0, 0.05, 0.1, 0.15, 0.2];
        Self {
            scenario: ScenarioName::Iceberg,
            rho_grid: vec![-0.2, 0.0, 0.2],
            fee: 0.0,
            margin: internex_core::naive::DEFAULT_MARGIN,
            figure_rho: 0.0,
            boundary_rho_grid: vec![-0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2],
            sweep_rho: 0.0,
            fee_grid: five.clone(),
            margin_grid: five,
            market: MarketParams::desk_calibration(),
            solver: SolverConfig::default(),
            sim: SimConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply_overrides(&mut self, out: Option<PathBuf>, seed: Option<u64>) {
        if let Some(out) = out {
            self.output_dir = out;
        }
        if let Some(seed) = seed {
            self.sim.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let grids = [
            ("rho_grid", &self.rho_grid),
            ("boundary_rho_grid", &self.boundary_rho_grid),
            ("fee_grid", &self.fee_grid),
            ("margin_grid", &self.margin_grid),
        ];
        for (name, grid) in grids {
            if grid.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
            if grid.iter().any(|v| !v.is_finite()) {
                return bad(format!("{name} has a non-finite entry"));
            }
        }
        for (name, grid) in [("fee_grid", &self.fee_grid), ("margin_grid", &self.margin_grid)] {
            if grid.iter().any(|&v| v < 0.0) {
                return bad(format!("{name} entries must be >= 0"));
            }
        }
        for (name, v) in [("fee", self.fee), ("margin", self.margin)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.figure_rho.is_finite() && self.sweep_rho.is_finite()) {
            return bad("figure_rho and sweep_rho must be finite".into());
        }
        if self.solver.dump_stride == 0 {
            return bad("solver.dump_stride must be at least 1".into());
        }
        if !(self.sim.report_scale > 0.0 && self.sim.report_scale.is_finite()) {
            return bad(format!("sim.report_scale must be positive, got {}", self.sim.report_scale));
        }
        self.market.validate()?;
        self.sim.validate(&self.market)?;
        self.solver.grid(&self.market, &InternalExchange::Disabled)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output directory is excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn partial_tables_merge_with_defaults() {
        let cfg = ExperimentConfig::from_toml("scenario = \"twap\"\n[market]\nsigma = 0.5\n[sim]\nn_paths = 10\n").unwrap();
        assert_eq!(cfg.scenario, ScenarioName::Twap);
        assert_eq!(cfg.market.sigma, 0.5);
        assert_eq!(cfg.sim.sigma(&cfg.market), 0.5);
        assert_eq!(cfg.market.buckets, MarketParams::desk_calibration().buckets);
        assert_eq!(cfg.sim.n_paths, 10);
        assert_eq!(cfg.sim.dt, 0.3);
        let cfg = ExperimentConfig::from_toml("[market]\nsigma = 0.5\n[sim]\nsigma = 2.0\n").unwrap();
        assert_eq!(cfg.sim.sigma(&cfg.market), 2.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(matches!(ExperimentConfig::from_toml("bogus = 1"), Err(CliError::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("scenario = \"vwap\""), Err(CliError::Config(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.rho_grid.clear();
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.solver.dt = 10.0;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.apply_overrides(Some(PathBuf::from("/elsewhere")), None);
        assert_eq!(a.hash(), b.hash());
        b.apply_overrides(None, Some(7));
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
