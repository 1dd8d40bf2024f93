//! Strategies built from a solved surface.

use std::io::{self, Write};

use serde::Serialize;

use crate::model::Side;
use crate::solver::{ExecutionRegion, ValueSurface};

/// Half-spreads for one order size; `None` means the size is not quoted on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeQuote {
    pub size: u32,
    pub bid: Option<f64>,
    pub ask: Option<f64>,
}

impl SizeQuote {
    pub fn depth(&self, side: Side) -> Option<f64> {
        match side {
            Side::Bid => self.bid,
            Side::Ask => self.ask,
        }
    }
}

/// One entry per size of the market's ladder, in ascending size order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuoteLadder {
    pub quotes: Vec<SizeQuote>,
}

impl QuoteLadder {
    pub fn get(&self, size: u32) -> Option<&SizeQuote> {
        self.quotes.iter().find(|q| q.size == size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyDecision {
    pub ladder: QuoteLadder,
    /// Take one unit from the internal order now.
    pub execute_now: bool,
    /// The queried state was off the policy's grid and was clamped to it.
    pub clamped: bool,
}

/// Anything the simulator can run.
pub trait Strategy: Sync {
    fn decide(&self, t: f64, q: i64, l: u32) -> StrategyDecision;
}

/// Clamps `(q, l)` to the surface grid. Liquidity is ignored for a surface solved without
/// an internal exchange.
fn clamp_state(surface: &ValueSurface, q: i64, l: u32) -> (i64, u32, bool) {
    let g = &surface.grid;
    let qc = q.clamp(g.q_min, g.q_max);
    let lc = l.min(g.lbar);
    let l_clamped = surface.internal.order().is_some() && lc != l;
    (qc, lc, qc != q || l_clamped)
}

fn ladder_at(surface: &ValueSurface, level: usize, q: i64, l: u32) -> QuoteLadder {
    let quotes = surface
        .market
        .sizes()
        .map(|size| SizeQuote {
            size,
            bid: surface.optimal_depth(level, q, l, Side::Bid, size).ok(),
            ask: surface.optimal_depth(level, q, l, Side::Ask, size).ok(),
        })
        .collect();
    QuoteLadder { quotes }
}

/// Time-dependent optimal policy: quotes and the take decision at the latest solved level
/// not after `t`.
#[derive(Debug, Clone, Copy)]
pub struct Policy<'a> {
    pub surface: &'a ValueSurface,
    pub region: &'a ExecutionRegion,
}

impl<'a> Policy<'a> {
    pub fn new(surface: &'a ValueSurface, region: &'a ExecutionRegion) -> Self {
        Self { surface, region }
    }

    /// The `t = 0` slice frozen into a time-independent table.
    pub fn stationary(&self) -> StationaryPolicy {
        stationary_policy(self.surface, self.region)
    }
}

impl Strategy for Policy<'_> {
    fn decide(&self, t: f64, q: i64, l: u32) -> StrategyDecision {
        decide(self.surface, self.region, t, q, l)
    }
}

pub fn decide(surface: &ValueSurface, region: &ExecutionRegion, t: f64, q: i64, l: u32) -> StrategyDecision {
    let level = surface.grid.level_at(t);
    let (q, l, clamped) = clamp_state(surface, q, l);
    StrategyDecision {
        ladder: ladder_at(surface, level, q, l),
        execute_now: l >= 1 && region.contains(level, q, l),
        clamped,
    }
}

/// Decision table over `(q, l)` taken from the first time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    q_min: i64,
    q_max: i64,
    lbar: u32,
    track_liquidity: bool,
    table: Vec<StrategyDecision>,
}

pub fn stationary_policy(surface: &ValueSurface, region: &ExecutionRegion) -> StationaryPolicy {
    let g = &surface.grid;
    let mut table = Vec::with_capacity(g.nodes_per_level());
    for q in g.q_min..=g.q_max {
        for l in 0..=g.lbar {
            table.push(decide(surface, region, 0.0, q, l));
        }
    }
    StationaryPolicy {
        q_min: g.q_min,
        q_max: g.q_max,
        lbar: g.lbar,
        track_liquidity: surface.internal.order().is_some(),
        table,
    }
}

impl StationaryPolicy {
    pub fn bounds(&self) -> (i64, i64) {
        (self.q_min, self.q_max)
    }

    pub fn lbar(&self) -> u32 {
        self.lbar
    }

    pub fn entry(&self, q: i64, l: u32) -> StrategyDecision {
        let qc = q.clamp(self.q_min, self.q_max);
        let lc = l.min(self.lbar);
        let clamped = qc != q || (self.track_liquidity && lc != l);
        let idx = (qc - self.q_min) as usize * (self.lbar as usize + 1) + lc as usize;
        let mut d = self.table[idx].clone();
        d.clamped = clamped;
        d
    }

    /// Rows `q,l,size,bid_depth,ask_depth,execute`; unquoted depths are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "q,l,size,bid_depth,ask_depth,execute")?;
        for q in self.q_min..=self.q_max {
            for l in 0..=self.lbar {
                let d = self.entry(q, l);
                for quote in &d.ladder.quotes {
                    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        q,
                        l,
                        quote.size,
                        fmt(quote.bid),
                        fmt(quote.ask),
                        d.execute_now as u8
                    )?;
                }
            }
        }
        Ok(())
    }
}

impl Strategy for StationaryPolicy {
    fn decide(&self, _t: f64, q: i64, l: u32) -> StrategyDecision {
        self.entry(q, l)
    }
}
