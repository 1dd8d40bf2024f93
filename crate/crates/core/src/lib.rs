//! Optimal market making with an option to take liquidity from an internal exchange.
//!
//! The dealer streams a multi-size bid/ask ladder to OTC clients whose arrivals are Poisson
//! with exponentially decaying intensity in the quoted half-spread, and may buy, one unit at a
//! time, from a client sell order resting on the dealer's internal exchange. That order may be
//! cancelled, replenished or re-posted depending on the client's placement algorithm.
//!
//! - [`model`]: constants, fill intensities and client-algo presets
//! - [`solver`]: the quasi-variational inequality for the reduced value function
//! - [`policy`]: quote ladders and take decisions from a solved surface
//! - [`naive`]: the VWAP-insertion benchmark
//! - [`sim`]: Monte Carlo market simulation
//! - [`sweep`]: fee and margin sweeps

pub mod error;
pub mod model;
pub mod naive;
pub mod policy;
pub mod sim;
pub mod solver;
pub mod sweep;

pub use error::{ModelError, Result};
pub use model::{
    effective_offset, fill_intensity, scenario_preset, InternalExchange, InternalOrderParams, MarketParams,
    ScenarioName, Side, SizeBucket,
};
pub use naive::{as_depths, naive_decision, vwap_adjusted_ask, BenchmarkConfig, NaiveBenchmark};
pub use policy::{decide, stationary_policy, Policy, QuoteLadder, SizeQuote, StationaryPolicy, Strategy, StrategyDecision};
pub use sim::{run_monte_carlo, MonteCarloRun, PathRecord, SimConfig, SummaryStats};
pub use solver::{solve, ExecutionRegion, SolverGrid, ValueSurface};
pub use sweep::{sweep, SolverSettings, SweepAxis, SweepPoint, SweepSetup};
