//! Event-driven Monte Carlo simulation of the dealer, the OTC clients and the internal order.
//!
//! Time advances in steps of `dt`. Within a step the order is fixed:
//!
//! 1. internal takes while the strategy asks for them and liquidity is shown,
//! 2. one Bernoulli draw per (side, size) for OTC fills at the quoted depths,
//! 3. cancellation or arrival of the internal order,
//! 4. a Gaussian mid-price increment.
//!
//! Every path owns four ChaCha streams (fills, order events, replenishment, diffusion) keyed by
//! the run seed and indexed by the path number, so results do not depend on thread scheduling,
//! and two strategies run with the same seed see the same mid-price path and the same uniforms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{InternalExchange, MarketParams, Side};
use crate::policy::Strategy;

/// Largest allowed `dt * sum(lambda)`; above it the one-fill-per-step thinning is too coarse.
pub const MAX_THINNING_PRODUCT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Decision step in seconds.
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub initial_q: i64,
    pub initial_x: f64,
    pub initial_s: f64,
    /// Starting liquidity; `None` starts with a full order of `lbar` units.
    pub initial_l: Option<u32>,
    /// Mid volatility for the simulation; `None` uses `market.sigma`.
    pub sigma: Option<f64>,
    /// Multiplier from price units to the reporting currency.
    pub report_scale: f64,
    /// Keep every take and fill of each path.
    pub record_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.3,
            horizon: 300.0,
            n_paths: 5_000,
            seed: 0x5eed_1e55,
            initial_q: 0,
            initial_x: 0.0,
            initial_s: 100.0,
            initial_l: None,
            sigma: None,
            report_scale: 1.0,
            record_events: false,
        }
    }
}

impl SimConfig {
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn sigma(&self, market: &MarketParams) -> f64 {
        self.sigma.unwrap_or(market.sigma)
    }

    pub fn validate(&self, market: &MarketParams) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("simulation dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("simulation horizon must be positive, got {}", self.horizon));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return bad(format!("horizon {} is not a whole number of steps of {}", self.horizon, self.dt));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if let Some(sigma) = self.sigma {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return bad(format!("sigma must be >= 0, got {sigma}"));
            }
        }
        let product = self.dt * market.total_base_intensity();
        if product > MAX_THINNING_PRODUCT {
            return bad(format!(
                "dt * total intensity = {product:.3} exceeds {MAX_THINNING_PRODUCT}"
            ));
        }
        Ok(())
    }
}

/// Mutable state of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub s: f64,
    pub q: i64,
    pub x: f64,
    pub l: u32,
    /// Units taken from the internal order so far.
    pub m: u64,
    pub first_fill_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    /// Dealer bought one unit from the internal order at `price`.
    Take { t: f64, price: f64 },
    /// OTC client traded `size` against the dealer's quote at `price`.
    Fill { t: f64, side: Side, size: u32, price: f64 },
}

/// Random streams owned by one path.
#[derive(Debug, Clone)]
pub struct PathStreams {
    fills: ChaCha8Rng,
    events: ChaCha8Rng,
    replenish: ChaCha8Rng,
    diffusion: ChaCha8Rng,
}

impl PathStreams {
    pub fn new(seed: u64, path: u64) -> Self {
        let stream = |channel: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path.wrapping_mul(4).wrapping_add(channel));
            rng
        };
        Self {
            fills: stream(0),
            events: stream(1),
            replenish: stream(2),
            diffusion: stream(3),
        }
    }
}

/// What one step contributed beyond the state change.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub clamps: u32,
    /// `phi Q^2 dt + psi L dt`, with `Q` and `L` taken after the step's internal takes.
    pub running_penalty: f64,
}

/// Advances `state` by one step of length `dt`.
#[allow(clippy::too_many_arguments)]
pub fn step<S: Strategy + ?Sized>(
    state: &mut SimState,
    strategy: &S,
    market: &MarketParams,
    internal: &InternalExchange,
    dt: f64,
    sigma: f64,
    streams: &mut PathStreams,
    mut log: Option<&mut Vec<Event>>,
) -> StepReport {
    let mut report = StepReport::default();
    let order = internal.order();

    let mut decision = strategy.decide(state.t, state.q, state.l);
    report.clamps += decision.clamped as u32;
    if let Some(o) = order {
        while decision.execute_now && state.l >= 1 {
            let price = state.s + o.effective_offset();
            state.q += 1;
            state.x -= price;
            state.m += 1;
            state.first_fill_time.get_or_insert(state.t);
            state.l -= 1;
            if state.l == 0 && streams.replenish.random::<f64>() < o.p {
                state.l = o.lbar;
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(Event::Take { t: state.t, price });
            }
            decision = strategy.decide(state.t, state.q, state.l);
            report.clamps += decision.clamped as u32;
        }
    }

    let q = state.q as f64;
    report.running_penalty = (market.phi * q * q + market.psi * state.l as f64) * dt;

    let s = state.s;
    for bucket in &market.buckets {
        let quote = decision.ladder.get(bucket.size);
        for side in Side::BOTH {
            // always draw so the stream stays aligned across strategies
            let u = streams.fills.random::<f64>();
            let Some(depth) = quote.and_then(|qt| qt.depth(side)) else {
                continue;
            };
            let prob = (bucket.lambda(side) * (-bucket.kappa * depth).exp() * dt).min(1.0);
            if u < prob {
                let z = bucket.size as f64;
                let price = match side {
                    Side::Bid => s - depth,
                    Side::Ask => s + depth,
                };
                match side {
                    Side::Bid => state.x -= z * price,
                    Side::Ask => state.x += z * price,
                }
                state.q += side.inventory_step(bucket.size);
                if let Some(log) = log.as_deref_mut() {
                    log.push(Event::Fill { t: state.t, side, size: bucket.size, price });
                }
            }
        }
    }

    let u = streams.events.random::<f64>();
    if let Some(o) = order {
        if state.l > 0 {
            if u < o.nu * dt {
                state.l = 0;
            }
        } else if u < o.mu * dt {
            state.l = o.lbar;
        }
    }

    let dw: f64 = streams.diffusion.sample(StandardNormal);
    state.s += sigma * dt.sqrt() * dw;
    state.t += dt;
    report
}

/// Summary of one simulated path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub path: usize,
    /// `X_T + Q_T S_T`
    pub pnl: f64,
    /// P&L less terminal and running penalties.
    pub objective: f64,
    /// `None` when the internal order was never touched before the horizon.
    pub time_to_first_fill: Option<f64>,
    pub internal_volume: u64,
    pub internal_volume_rate: f64,
    pub clamp_count: u64,
    pub final_q: i64,
    pub final_x: f64,
    pub final_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<Event>>,
}

pub fn simulate_path<S: Strategy + ?Sized>(
    strategy: &S,
    market: &MarketParams,
    internal: &InternalExchange,
    config: &SimConfig,
    path: usize,
) -> PathRecord {
    let mut streams = PathStreams::new(config.seed, path as u64);
    let l0 = match internal.order() {
        Some(o) => config.initial_l.unwrap_or(o.lbar).min(o.lbar),
        None => 0,
    };
    let mut state = SimState {
        t: 0.0,
        s: config.initial_s,
        q: config.initial_q,
        x: config.initial_x,
        l: l0,
        m: 0,
        first_fill_time: None,
    };
    let mut events = config.record_events.then(Vec::new);
    let mut penalty = 0.0;
    let mut clamps = 0u64;
    let n_steps = config.n_steps();
    for k in 0..n_steps {
        // keep time on the exact step lattice
        state.t = k as f64 * config.dt;
        let r = step(&mut state, strategy, market, internal, config.dt, config.sigma(market), &mut streams, events.as_mut());
        penalty += r.running_penalty;
        clamps += r.clamps as u64;
    }
    let horizon = n_steps as f64 * config.dt;
    let pnl = state.x + state.q as f64 * state.s;
    let qt = state.q as f64;
    PathRecord {
        path,
        pnl,
        objective: pnl - market.alpha * qt * qt - penalty,
        time_to_first_fill: state.first_fill_time,
        internal_volume: state.m,
        internal_volume_rate: state.m as f64 / horizon,
        clamp_count: clamps,
        final_q: state.q,
        final_x: state.x,
        final_s: state.s,
        events,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n_paths: usize,
    pub pnl_mean: f64,
    pub pnl_std: f64,
    pub objective_mean: f64,
    /// Monte Carlo standard error of `objective_mean`.
    pub objective_se: f64,
    /// Share of paths with at least one internal take.
    pub fill_fraction: f64,
    /// Over filled paths only; `None` when no path filled.
    pub fill_time_mean: Option<f64>,
    pub fill_time_std: Option<f64>,
    /// Over all paths, unfilled paths counted at the horizon.
    pub censored_fill_time_mean: f64,
    pub volume_rate_mean: f64,
    pub clamp_total: u64,
    /// False when any path had to clamp its state to the policy grid.
    pub valid: bool,
    pub report_scale: f64,
}

#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub paths: Vec<PathRecord>,
    pub summary: SummaryStats,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let std = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, std, n)
}

pub fn summarize(paths: &[PathRecord], horizon: f64, report_scale: f64) -> SummaryStats {
    let (pnl_mean, pnl_std, n) = mean_std(paths.iter().map(|p| p.pnl));
    let (objective_mean, objective_std, _) = mean_std(paths.iter().map(|p| p.objective));
    let filled = paths.iter().filter_map(|p| p.time_to_first_fill);
    let (fm, fs, n_filled) = mean_std(filled);
    let (censored, _, _) = mean_std(paths.iter().map(|p| p.time_to_first_fill.unwrap_or(horizon)));
    let (volume_rate_mean, _, _) = mean_std(paths.iter().map(|p| p.internal_volume_rate));
    let clamp_total = paths.iter().map(|p| p.clamp_count).sum();
    SummaryStats {
        n_paths: n,
        pnl_mean,
        pnl_std,
        objective_mean,
        objective_se: objective_std / (n as f64).sqrt(),
        fill_fraction: n_filled as f64 / n as f64,
        fill_time_mean: (n_filled > 0).then_some(fm),
        fill_time_std: (n_filled > 0).then_some(fs),
        censored_fill_time_mean: censored,
        volume_rate_mean,
        clamp_total,
        valid: clamp_total == 0,
        report_scale,
    }
}

/// Simulates `config.n_paths` independent paths in parallel and reduces them in path order.
pub fn run_monte_carlo<S: Strategy + ?Sized>(
    strategy: &S,
    market: &MarketParams,
    internal: &InternalExchange,
    config: &SimConfig,
) -> Result<MonteCarloRun> {
    config.validate(market)?;
    internal.validate()?;
    let paths: Vec<PathRecord> = (0..config.n_paths)
        .into_par_iter()
        .map(|k| simulate_path(strategy, market, internal, config, k))
        .collect();
    let horizon = config.n_steps() as f64 * config.dt;
    let summary = summarize(&paths, horizon, config.report_scale);
    Ok(MonteCarloRun { paths, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{scenario_preset, InternalOrderParams, ScenarioName, SizeBucket};
    use crate::policy::{QuoteLadder, SizeQuote, StrategyDecision};

    /// Quotes a fixed depth on every size and never takes.
    struct Flat(f64, Vec<u32>);

    impl Strategy for Flat {
        fn decide(&self, _t: f64, _q: i64, _l: u32) -> StrategyDecision {
            StrategyDecision {
                ladder: QuoteLadder {
                    quotes: self.1.iter().map(|&size| SizeQuote { size, bid: Some(self.0), ask: Some(self.0) }).collect(),
                },
                execute_now: false,
                clamped: false,
            }
        }
    }

    /// Takes whenever liquidity is shown.
    struct Greedy(Vec<u32>);

    impl Strategy for Greedy {
        fn decide(&self, t: f64, q: i64, l: u32) -> StrategyDecision {
            let mut d = Flat(0.5, self.0.clone()).decide(t, q, l);
            d.execute_now = l >= 1;
            d
        }
    }

    fn tiny_market() -> MarketParams {
        MarketParams {
            sigma: 0.0,
            buckets: vec![SizeBucket { size: 1, lambda_bid: 1e-300, lambda_ask: 1e-300, kappa: 1.0 }],
            alpha: 0.0,
            phi: 0.0,
            psi: 0.0,
            horizon: 10.0,
        }
    }

    fn config(n_paths: usize) -> SimConfig {
        SimConfig {
            dt: 0.3,
            horizon: 30.0,
            n_paths,
            seed: 7,
            sigma: Some(0.0),
            ..SimConfig::default()
        }
    }

    #[test]
    fn no_randomness_only_moves_time() {
        let m = tiny_market();
        let strategy = Flat(1.0, vec![1]);
        let mut state = SimState { t: 1.2, s: 100.0, q: 3, x: -7.0, l: 0, m: 0, first_fill_time: None };
        let before = state.clone();
        let mut streams = PathStreams::new(1, 0);
        step(&mut state, &strategy, &m, &InternalExchange::Disabled, 0.3, 0.0, &mut streams, None);
        assert!((state.t - 1.5).abs() < 1e-15);
        state.t = before.t;
        assert_eq!(state, before);

        let run = run_monte_carlo(&strategy, &m, &InternalExchange::Disabled, &config(1)).unwrap();
        assert_eq!(run.summary.pnl_mean, 0.0);
        assert!(run.summary.valid);
    }

    #[test]
    fn certain_cancellation() {
        let m = tiny_market();
        let internal = InternalExchange::Enabled(InternalOrderParams {
            lbar: 1,
            nu: 1.0 / 0.3,
            mu: 0.0,
            p: 0.0,
            rho_tilde: 0.0,
            xi: 0.0,
        });
        let mut state = SimState { t: 0.0, s: 1.0, q: 0, x: 0.0, l: 1, m: 0, first_fill_time: None };
        let mut streams = PathStreams::new(3, 9);
        step(&mut state, &Flat(1.0, vec![1]), &m, &internal, 0.3, 0.0, &mut streams, None);
        assert_eq!(state.l, 0);
    }

    #[test]
    fn takes_follow_order_model() {
        let m = tiny_market();
        let mut order = scenario_preset(ScenarioName::FullAmount, 0.1, 0.0);
        order.nu = 0.0;
        let internal = InternalExchange::Enabled(order);
        let mut cfg = config(3);
        cfg.record_events = true;
        let run = run_monte_carlo(&Greedy(vec![1]), &m, &internal, &cfg).unwrap();
        for p in &run.paths {
            assert_eq!(p.time_to_first_fill, Some(0.0));
            assert_eq!(p.internal_volume, 10);
            assert_eq!(p.final_q, 10);
            assert!((p.final_x + 10.0 * 100.1).abs() < 1e-9);
        }

        // always replenished: the greedy dealer empties it once per step at most, forever
        let mut order = scenario_preset(ScenarioName::Iceberg, 0.0, 0.0);
        order.p = 0.0;
        order.nu = 0.0;
        order.mu = 1.0;
        let internal = InternalExchange::Enabled(order);
        let run = run_monte_carlo(&Greedy(vec![1]), &m, &internal, &cfg).unwrap();
        for p in &run.paths {
            let takes = p.events.as_ref().unwrap().len() as u64;
            assert_eq!(takes, p.internal_volume);
            assert!(p.internal_volume >= 1);
        }
    }

    #[test]
    fn replay_reproduces_cash_and_inventory() {
        let m = MarketParams {
            sigma: 1.0,
            ..MarketParams::desk_calibration()
        };
        let internal = InternalExchange::Enabled(scenario_preset(ScenarioName::Twap, -0.1, 0.0));
        let mut cfg = config(20);
        cfg.sigma = None;
        cfg.record_events = true;
        cfg.initial_x = 3.5;
        cfg.initial_q = -2;
        let run = run_monte_carlo(&Greedy(vec![1, 5, 10]), &m, &internal, &cfg).unwrap();
        for p in &run.paths {
            let (mut x, mut q, mut m_count) = (cfg.initial_x, cfg.initial_q, 0u64);
            let mut first = None;
            for e in p.events.as_ref().unwrap() {
                match *e {
                    Event::Take { t, price } => {
                        x -= price;
                        q += 1;
                        m_count += 1;
                        first.get_or_insert(t);
                    }
                    Event::Fill { side: Side::Bid, size, price, .. } => {
                        x -= size as f64 * price;
                        q += size as i64;
                    }
                    Event::Fill { side: Side::Ask, size, price, .. } => {
                        x += size as f64 * price;
                        q -= size as i64;
                    }
                }
            }
            assert_eq!(x, p.final_x);
            assert_eq!(q, p.final_q);
            assert_eq!(m_count, p.internal_volume);
            assert_eq!(first, p.time_to_first_fill);
        }
    }

    #[test]
    fn seed_determinism_and_sensitivity() {
        let m = MarketParams::desk_calibration();
        let internal = InternalExchange::Enabled(scenario_preset(ScenarioName::Iceberg, 0.0, 0.0));
        let mut cfg = config(64);
        cfg.sigma = None;
        let a = run_monte_carlo(&Greedy(vec![1, 5, 10]), &m, &internal, &cfg).unwrap();
        let b = run_monte_carlo(&Greedy(vec![1, 5, 10]), &m, &internal, &cfg).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.paths, b.paths);
        cfg.seed += 1;
        let c = run_monte_carlo(&Greedy(vec![1, 5, 10]), &m, &internal, &cfg).unwrap();
        assert_ne!(a.summary.pnl_mean, c.summary.pnl_mean);
    }

    #[test]
    fn config_validation() {
        let m = MarketParams::desk_calibration();
        let mut cfg = SimConfig::default();
        cfg.validate(&m).unwrap();
        cfg.n_paths = 0;
        assert!(cfg.validate(&m).is_err());
        let mut cfg = SimConfig { dt: 2.0, horizon: 300.0, ..SimConfig::default() };
        assert!(cfg.validate(&m).is_err());
        cfg.dt = 0.7;
        assert!(cfg.validate(&m).is_err());
    }

    #[test]
    fn objective_never_exceeds_pnl() {
        let m = MarketParams::desk_calibration();
        let internal = InternalExchange::Enabled(scenario_preset(ScenarioName::Twap, 0.0, 0.0));
        let run = run_monte_carlo(&Flat(0.6, vec![1, 5, 10]), &m, &internal, &config(50)).unwrap();
        for p in &run.paths {
            assert!(p.objective <= p.pnl);
        }
    }
}
