//! Fee and margin sweeps comparing the optimal strategy, the naive benchmark and the
//! reference quotes that ignore the internal exchange.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{scenario_preset, InternalExchange, MarketParams, ScenarioName};
use crate::naive::{BenchmarkConfig, NaiveBenchmark};
use crate::policy::{stationary_policy, Strategy};
use crate::sim::{run_monte_carlo, SimConfig, SummaryStats};
use crate::solver::{solve, SolverGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Vary the fee `xi`; the naive margin is held at zero.
    Fee,
    /// Vary the naive margin `iota`; the fee is held at zero.
    Margin,
}

/// Solver discretisation used when a sweep needs fresh surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub dt: f64,
    pub q_min: i64,
    pub q_max: i64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt: crate::solver::DEFAULT_DT,
            q_min: -crate::solver::DEFAULT_Q_BOUND,
            q_max: crate::solver::DEFAULT_Q_BOUND,
        }
    }
}

impl SolverSettings {
    pub fn grid(&self, market: &MarketParams, internal: &InternalExchange) -> Result<SolverGrid> {
        SolverGrid::new(market, internal, self.dt, self.q_min, self.q_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyOutcome {
    pub pnl_mean: f64,
    pub pnl_std: f64,
    pub volume_rate_mean: f64,
    pub valid: bool,
}

impl From<&SummaryStats> for StrategyOutcome {
    fn from(s: &SummaryStats) -> Self {
        Self {
            pnl_mean: s.pnl_mean,
            pnl_std: s.pnl_std,
            volume_rate_mean: s.volume_rate_mean,
            valid: s.valid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub optimal: StrategyOutcome,
    pub naive: StrategyOutcome,
    pub reference: StrategyOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub market: MarketParams,
    pub scenario: ScenarioName,
    pub rho_tilde: f64,
    pub solver: SolverSettings,
    pub sim: SimConfig,
}

fn simulate<S: Strategy>(setup: &SweepSetup, strategy: &S, internal: &InternalExchange) -> Result<StrategyOutcome> {
    let run = run_monte_carlo(strategy, &setup.market, internal, &setup.sim)?;
    Ok(StrategyOutcome::from(&run.summary))
}

fn optimal_outcome(setup: &SweepSetup, internal: &InternalExchange) -> Result<StrategyOutcome> {
    let grid = setup.solver.grid(&setup.market, internal)?;
    let (surface, region) = solve(&setup.market, internal, &grid)?;
    simulate(setup, &stationary_policy(&surface, &region), internal)
}

/// Runs every strategy at each value of `axis`, all with the same seed. The optimal policy is
/// re-solved for every fee since the fee moves the effective offset.
pub fn sweep(setup: &SweepSetup, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    let disabled = InternalExchange::Disabled;
    let ref_grid = setup.solver.grid(&setup.market, &disabled)?;
    let (ref_surface, ref_region) = solve(&setup.market, &disabled, &ref_grid)?;
    let base_internal = InternalExchange::Enabled(scenario_preset(setup.scenario, setup.rho_tilde, 0.0));
    let reference = simulate(setup, &stationary_policy(&ref_surface, &ref_region), &base_internal)?;
    let fixed_optimal = match axis {
        SweepAxis::Margin => Some(optimal_outcome(setup, &base_internal)?),
        SweepAxis::Fee => None,
    };

    values
        .iter()
        .map(|&value| {
            let (xi, iota) = match axis {
                SweepAxis::Fee => (value, 0.0),
                SweepAxis::Margin => (0.0, value),
            };
            let internal = InternalExchange::Enabled(scenario_preset(setup.scenario, setup.rho_tilde, xi));
            let optimal = match fixed_optimal {
                Some(o) => o,
                None => optimal_outcome(setup, &internal)?,
            };
            let bench = NaiveBenchmark::new(
                &ref_surface,
                &ref_region,
                BenchmarkConfig {
                    iota,
                    rho_tilde: setup.rho_tilde,
                },
            )?;
            let naive = simulate(setup, &bench, &internal)?;
            Ok(SweepPoint {
                axis,
                value,
                optimal,
                naive,
                reference,
            })
        })
        .collect()
}
