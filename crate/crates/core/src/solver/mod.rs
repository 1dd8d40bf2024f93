//! Explicit time-marching solver for the reduced quasi-variational inequality.
//!
//! Writing the dealer's value as `x + q s + h(t, q, l)`, the function `h` satisfies
//!
//! ```text
//! 0 = max{ h_t + H(h)(t, q, l),  I(h)(t, q, l) - h(t, q, l) },   h(T, q, l) = -alpha q^2
//! ```
//!
//! where `H` collects the running penalties, the feedback-form quoting Hamiltonians and the
//! liquidity jumps, and `I` is the value after buying one unit from the internal order.
//!
//! The scheme marches from `T` back to `0`: each level first takes an explicit Euler step of
//! the continuation dynamics using the later level, then enforces the obstacle `h >= I(h)` on
//! the new level itself, since internal takes are instantaneous and may chain.

mod io;

pub use io::{read_binary, SurfaceDump};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{InternalExchange, MarketParams, Side};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_Q_BOUND: i64 = 30;

/// Discretisation of `[0, T] x [q_min, q_max] x {0, ..., lbar}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverGrid {
    pub dt: f64,
    /// Number of time steps; there are `n_steps + 1` time levels.
    pub n_steps: usize,
    pub q_min: i64,
    pub q_max: i64,
    /// Largest liquidity level; 0 when the internal exchange is disabled.
    pub lbar: u32,
}

impl SolverGrid {
    /// Builds a grid covering the market horizon and checks the explicit-scheme bound
    /// `dt * (sum_i,z lambda^{i,z} / e + nu + mu) < 1`.
    pub fn new(market: &MarketParams, internal: &InternalExchange, dt: f64, q_min: i64, q_max: i64) -> Result<Self> {
        market.validate()?;
        internal.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ModelError::InvalidParams(format!("dt must be positive, got {dt}")));
        }
        if !(q_min < 0 && q_max > 0) {
            return Err(ModelError::InvalidParams(format!(
                "inventory bounds must straddle zero, got [{q_min}, {q_max}]"
            )));
        }
        let steps = market.horizon / dt;
        let n_steps = steps.round() as usize;
        if n_steps == 0 || (steps - n_steps as f64).abs() > 1e-6 * steps.max(1.0) {
            return Err(ModelError::InvalidParams(format!(
                "horizon {} is not a whole number of steps of {dt}",
                market.horizon
            )));
        }
        let jump_rates = internal.order().map_or(0.0, |o| o.nu + o.mu);
        let product = dt * (market.total_base_intensity() * (-1.0f64).exp() + jump_rates);
        if product >= 1.0 {
            return Err(ModelError::Unstable { product });
        }
        Ok(Self {
            dt,
            n_steps,
            q_min,
            q_max,
            lbar: internal.max_liquidity(),
        })
    }

    pub fn n_levels(&self) -> usize {
        self.n_steps + 1
    }

    pub fn n_q(&self) -> usize {
        (self.q_max - self.q_min + 1) as usize
    }

    pub fn n_l(&self) -> usize {
        self.lbar as usize + 1
    }

    pub fn nodes_per_level(&self) -> usize {
        self.n_q() * self.n_l()
    }

    pub fn q_index(&self, q: i64) -> Option<usize> {
        (self.q_min..=self.q_max).contains(&q).then(|| (q - self.q_min) as usize)
    }

    pub fn q_at(&self, qi: usize) -> i64 {
        self.q_min + qi as i64
    }

    pub fn time_of(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }

    /// Latest level whose time does not exceed `t`, clamped to `[0, n_steps]`.
    pub fn level_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let k = (t / self.dt + 1e-9).floor() as usize;
        k.min(self.n_steps)
    }
}

/// Per-size constants of the feedback-form Hamiltonian.
#[derive(Debug, Clone, Copy)]
struct HamiltonianTerm {
    step: usize,
    bid_coef: f64,
    ask_coef: f64,
    /// `kappa / z`
    slope: f64,
}

/// Read-only view of the operator pieces used by the solver, the residual check and the
/// public node-level operations.
#[derive(Debug, Clone)]
struct Operator {
    n_q: usize,
    n_l: usize,
    q_min: i64,
    dt: f64,
    phi: f64,
    psi: f64,
    terms: Vec<HamiltonianTerm>,
    nu: f64,
    mu: f64,
    p: f64,
    rho: f64,
    lbar: usize,
    enabled: bool,
}

impl Operator {
    fn new(market: &MarketParams, internal: &InternalExchange, grid: &SolverGrid) -> Self {
        let inv_e = (-1.0f64).exp();
        let terms = market
            .buckets
            .iter()
            .map(|b| {
                let z = b.size as f64;
                HamiltonianTerm {
                    step: b.size as usize,
                    bid_coef: z * b.lambda_bid * inv_e / b.kappa,
                    ask_coef: z * b.lambda_ask * inv_e / b.kappa,
                    slope: b.kappa / z,
                }
            })
            .collect();
        let (nu, mu, p, rho) = internal
            .order()
            .map_or((0.0, 0.0, 0.0, 0.0), |o| (o.nu, o.mu, o.p, o.effective_offset()));
        Self {
            n_q: grid.n_q(),
            n_l: grid.n_l(),
            q_min: grid.q_min,
            dt: grid.dt,
            phi: market.phi,
            psi: market.psi,
            terms,
            nu,
            mu,
            p,
            rho,
            lbar: grid.lbar as usize,
            enabled: internal.order().is_some(),
        }
    }

    #[inline]
    fn at(&self, qi: usize, li: usize) -> usize {
        qi * self.n_l + li
    }

    /// Continuation right-hand side on one time slice.
    fn rhs(&self, slice: &[f64], qi: usize, li: usize) -> f64 {
        let q = (self.q_min + qi as i64) as f64;
        let here = slice[self.at(qi, li)];
        let mut acc = -self.phi * q * q - self.psi * li as f64;
        for t in &self.terms {
            // Bid and ask terms are paired before accumulation so that mirrored nodes add
            // the same numbers in the same order.
            let bid = if qi + t.step < self.n_q {
                t.bid_coef * (t.slope * (slice[self.at(qi + t.step, li)] - here)).exp()
            } else {
                0.0
            };
            let ask = if qi >= t.step {
                t.ask_coef * (t.slope * (slice[self.at(qi - t.step, li)] - here)).exp()
            } else {
                0.0
            };
            acc += bid + ask;
        }
        if self.enabled {
            if li > 0 {
                acc += self.nu * (slice[self.at(qi, 0)] - here);
            } else {
                acc += self.mu * (slice[self.at(qi, self.lbar)] - here);
            }
        }
        acc
    }

    fn continuation(&self, later: &[f64], qi: usize, li: usize) -> f64 {
        later[self.at(qi, li)] + self.dt * self.rhs(later, qi, li)
    }

    /// Value of taking one unit now, or `None` where taking is not allowed.
    fn intervention(&self, slice: &[f64], qi: usize, li: usize) -> Option<f64> {
        if !self.enabled || li == 0 || qi + 1 >= self.n_q {
            return None;
        }
        let up = qi + 1;
        let after = if li == 1 {
            self.p * slice[self.at(up, self.lbar)] + (1.0 - self.p) * slice[self.at(up, 0)]
        } else {
            slice[self.at(up, li - 1)]
        };
        Some(after - self.rho)
    }

    /// Raises `slice` to the obstacle until it is a fixed point. Intervention at `q` only
    /// reads `q + 1`, so a sweep from the top of the grid settles every chain in one pass;
    /// the loop exits on the first sweep that changes nothing.
    fn enforce_obstacle(&self, slice: &mut [f64]) {
        if !self.enabled {
            return;
        }
        loop {
            let mut changed = false;
            for qi in (0..self.n_q).rev() {
                for li in 1..self.n_l {
                    if let Some(v) = self.intervention(slice, qi, li) {
                        let idx = self.at(qi, li);
                        if v > slice[idx] {
                            slice[idx] = v;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
}

/// Solved values `h(t, q, l)` on every grid node.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    pub grid: SolverGrid,
    pub market: MarketParams,
    pub internal: InternalExchange,
    values: Vec<f64>,
    op: Operator,
}

/// Nodes where the internal take attains the maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionRegion {
    grid: SolverGrid,
    mask: Vec<bool>,
}

impl ExecutionRegion {
    fn index(&self, level: usize, q: i64, l: u32) -> Option<usize> {
        let qi = self.grid.q_index(q)?;
        (level < self.grid.n_levels() && l <= self.grid.lbar)
            .then(|| (level * self.grid.n_q() + qi) * self.grid.n_l() + l as usize)
    }

    pub fn grid(&self) -> &SolverGrid {
        &self.grid
    }

    pub fn contains(&self, level: usize, q: i64, l: u32) -> bool {
        self.index(level, q, l).is_some_and(|i| self.mask[i])
    }

    /// Largest inventory inside the region at `(level, l)`.
    pub fn boundary(&self, level: usize, l: u32) -> Option<i64> {
        (self.grid.q_min..=self.grid.q_max)
            .rev()
            .find(|&q| self.contains(level, q, l))
    }

    /// Inventories inside the region at `(level, l)`, ascending.
    pub fn members(&self, level: usize, l: u32) -> Vec<i64> {
        (self.grid.q_min..=self.grid.q_max)
            .filter(|&q| self.contains(level, q, l))
            .collect()
    }
}

/// Solves backward from the terminal condition.
pub fn solve(market: &MarketParams, internal: &InternalExchange, grid: &SolverGrid) -> Result<(ValueSurface, ExecutionRegion)> {
    let expected = SolverGrid::new(market, internal, grid.dt, grid.q_min, grid.q_max)?;
    if expected != *grid {
        return Err(ModelError::InvalidParams("grid does not match the market horizon or order size".into()));
    }
    let op = Operator::new(market, internal, grid);
    let per_level = grid.nodes_per_level();
    let mut values = vec![0.0; per_level * grid.n_levels()];
    let mut mask = vec![false; values.len()];

    let terminal = grid.n_steps * per_level;
    for qi in 0..grid.n_q() {
        let q = grid.q_at(qi) as f64;
        for li in 0..grid.n_l() {
            values[terminal + op.at(qi, li)] = -market.alpha * q * q;
        }
    }

    for level in (0..grid.n_steps).rev() {
        let (head, tail) = values.split_at_mut((level + 1) * per_level);
        let later = &tail[..per_level];
        let current = &mut head[level * per_level..];
        for qi in 0..grid.n_q() {
            for li in 0..grid.n_l() {
                current[op.at(qi, li)] = op.continuation(later, qi, li);
            }
        }
        op.enforce_obstacle(current);

        let level_mask = &mut mask[level * per_level..(level + 1) * per_level];
        for qi in 0..grid.n_q() {
            for li in 0..grid.n_l() {
                let v = current[op.at(qi, li)];
                if !v.is_finite() {
                    return Err(ModelError::NumericalFailure {
                        level,
                        q: grid.q_at(qi),
                        l: li as u32,
                    });
                }
                if let Some(iv) = op.intervention(current, qi, li) {
                    // Ties count as inside the region.
                    level_mask[op.at(qi, li)] = iv >= v;
                }
            }
        }
    }

    let surface = ValueSurface {
        grid: *grid,
        market: market.clone(),
        internal: *internal,
        values,
        op,
    };
    let region = ExecutionRegion { grid: *grid, mask };
    Ok((surface, region))
}

impl ValueSurface {
    fn node(&self, level: usize, q: i64, l: u32) -> Result<(usize, usize)> {
        let off = ModelError::OffGrid { level, q, l };
        let qi = self.grid.q_index(q).ok_or(off.clone())?;
        if level >= self.grid.n_levels() || l > self.grid.lbar {
            return Err(off);
        }
        Ok((qi, l as usize))
    }

    fn slice(&self, level: usize) -> &[f64] {
        let n = self.grid.nodes_per_level();
        &self.values[level * n..(level + 1) * n]
    }

    pub fn h(&self, level: usize, q: i64, l: u32) -> Result<f64> {
        let (qi, li) = self.node(level, q, l)?;
        Ok(self.slice(level)[self.op.at(qi, li)])
    }

    /// Raw values of one time level, `q`-major with `l` varying fastest.
    pub fn level_values(&self, level: usize) -> &[f64] {
        self.slice(level)
    }

    /// Continuation right-hand side evaluated on level `level`.
    pub fn continuation_rhs(&self, level: usize, q: i64, l: u32) -> Result<f64> {
        let (qi, li) = self.node(level, q, l)?;
        Ok(self.op.rhs(self.slice(level), qi, li))
    }

    /// Value of buying one unit from the internal order at `(level, q, l)`.
    pub fn intervention_value(&self, level: usize, q: i64, l: u32) -> Result<f64> {
        let (qi, li) = self.node(level, q, l)?;
        if li == 0 || !self.op.enabled {
            return Err(ModelError::NoLiquidity);
        }
        self.op
            .intervention(self.slice(level), qi, li)
            .ok_or(ModelError::OffGrid { level, q: q + 1, l })
    }

    /// Feedback-form optimal half-spread. Negative values (quoting through mid) are allowed.
    pub fn optimal_depth(&self, level: usize, q: i64, l: u32, side: Side, size: u32) -> Result<f64> {
        let bucket = *self.market.bucket(size)?;
        let here = self.h(level, q, l)?;
        let there = self.h(level, q + side.inventory_step(size), l)?;
        Ok(1.0 / bucket.kappa + (here - there) / size as f64)
    }

    /// Largest violation of the discrete scheme over all nodes: the terminal condition, and
    /// `max(continuation - h, intervention - h) = 0` on every earlier level. A solved surface
    /// gives zero up to rounding.
    pub fn qvi_residual(&self) -> f64 {
        let grid = &self.grid;
        let mut worst = 0.0f64;
        let last = self.slice(grid.n_steps);
        for qi in 0..grid.n_q() {
            let q = grid.q_at(qi) as f64;
            for li in 0..grid.n_l() {
                let r = (last[self.op.at(qi, li)] + self.market.alpha * q * q).abs();
                worst = worst.max(r);
            }
        }
        for level in 0..grid.n_steps {
            let current = self.slice(level);
            let later = self.slice(level + 1);
            for qi in 0..grid.n_q() {
                for li in 0..grid.n_l() {
                    let v = current[self.op.at(qi, li)];
                    let mut r = self.op.continuation(later, qi, li) - v;
                    if let Some(iv) = self.op.intervention(current, qi, li) {
                        r = r.max(iv - v);
                    }
                    worst = worst.max(if r.is_nan() { f64::INFINITY } else { r.abs() });
                }
            }
        }
        worst
    }

    /// Largest `|h|` on the grid, the scale for relative residuals.
    pub fn value_scale(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Overwrites one node; only meant for residual diagnostics and tests.
    pub fn perturb(&mut self, level: usize, q: i64, l: u32, delta: f64) -> Result<()> {
        let (qi, li) = self.node(level, q, l)?;
        let n = self.grid.nodes_per_level();
        let idx = level * n + self.op.at(qi, li);
        self.values[idx] += delta;
        Ok(())
    }
}
