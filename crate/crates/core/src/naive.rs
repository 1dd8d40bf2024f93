//! The naive benchmark: Avellaneda–Stoikov quotes from the model without an internal
//! exchange, the client's resting order pasted into the ask ladder at its price plus a
//! dealer margin, and "take whenever short".

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::policy::{stationary_policy, QuoteLadder, StationaryPolicy, Strategy, StrategyDecision};
use crate::solver::{ExecutionRegion, ValueSurface};

pub const DEFAULT_MARGIN: f64 = 0.1;

/// Reference quotes at `t = 0` and inventory `q`, read from a surface solved without an
/// internal exchange.
pub fn as_depths(reference: &ValueSurface, q: i64) -> Result<QuoteLadder> {
    let g = &reference.grid;
    if g.q_index(q).is_none() {
        return Err(ModelError::OffGrid { level: 0, q, l: 0 });
    }
    let quotes = reference
        .market
        .sizes()
        .map(|size| crate::policy::SizeQuote {
            size,
            bid: reference.optimal_depth(0, q, 0, crate::model::Side::Bid, size).ok(),
            ask: reference.optimal_depth(0, q, 0, crate::model::Side::Ask, size).ok(),
        })
        .collect();
    Ok(QuoteLadder { quotes })
}

/// Why an adjustment was skipped or altered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AdjustNote {
    /// The inserted price is not below any quoted ask; the ladder is left as is.
    NoInsertionPoint,
    /// Some ask size is unquoted, so cumulative costs are undefined; left as is.
    UnquotedAsk,
    /// The slice was larger than the top size and was capped to it.
    SliceCapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedLadder {
    pub ladder: QuoteLadder,
    pub note: Option<AdjustNote>,
}

/// Cumulative cost of the first `units` of a ladder whose size-`z_j` VWAP is `d_j`, i.e. the
/// piecewise-linear interpolation of `z_j d_j` through the origin.
fn cumulative_cost(sizes: &[f64], vwaps: &[f64], units: f64) -> f64 {
    let (mut prev_z, mut prev_c) = (0.0, 0.0);
    for (&z, &d) in sizes.iter().zip(vwaps) {
        let c = z * d;
        if units <= z {
            return prev_c + (units - prev_z) * (c - prev_c) / (z - prev_z);
        }
        prev_z = z;
        prev_c = c;
    }
    prev_c
}

/// Ask ladder after inserting `l` units at `rho_tilde + iota`.
///
/// With `i` the first size whose reference VWAP exceeds the inserted price, the slice is placed
/// after the first `z_{i-1}` units of the marginal ladder (`z_0 = 0`). Sizes below `i` keep their
/// quote; size `z_j` for `j >= i` is quoted at the VWAP of its first `z_j` units, which is
/// `(s P + C(z_j - s)) / z_j` with `s = min(l, z_j - z_{i-1})` and `C` the reference cumulative
/// cost. When `l` fits inside every segment this is the familiar three-term sum with `l` units
/// of the top segment pushed out; for larger slices the push-out spans several segments.
pub fn vwap_adjusted_ask(as_ladder: &QuoteLadder, l: u32, rho_tilde: f64, iota: f64) -> AdjustedLadder {
    let unchanged = |note| AdjustedLadder {
        ladder: as_ladder.clone(),
        note,
    };
    if l == 0 || as_ladder.quotes.is_empty() {
        return unchanged(None);
    }
    let Some(asks) = as_ladder.quotes.iter().map(|q| q.ask).collect::<Option<Vec<f64>>>() else {
        return unchanged(Some(AdjustNote::UnquotedAsk));
    };
    let sizes: Vec<f64> = as_ladder.quotes.iter().map(|q| q.size as f64).collect();
    let price = rho_tilde + iota;
    let Some(i) = asks.iter().position(|&d| price < d) else {
        return unchanged(Some(AdjustNote::NoInsertionPoint));
    };
    let top = *sizes.last().unwrap();
    let (slice, note) = if l as f64 > top {
        (top, Some(AdjustNote::SliceCapped))
    } else {
        (l as f64, None)
    };
    let before = if i == 0 { 0.0 } else { sizes[i - 1] };

    let mut ladder = as_ladder.clone();
    for (j, quote) in ladder.quotes.iter_mut().enumerate().skip(i) {
        let z = sizes[j];
        let taken = slice.min(z - before);
        let cost = taken * price + cumulative_cost(&sizes, &asks, z - taken);
        quote.ask = Some(cost / z);
    }
    AdjustedLadder { ladder, note }
}

/// Take the internal order whenever inventory is short and liquidity is shown.
pub fn naive_decision(q: i64, l: u32) -> bool {
    l >= 1 && q < 0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkConfig {
    /// Dealer margin added to the client's price.
    pub iota: f64,
    pub rho_tilde: f64,
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iota >= 0.0 && self.iota.is_finite()) {
            return Err(ModelError::InvalidParams(format!("margin must be >= 0, got {}", self.iota)));
        }
        Ok(())
    }
}

/// The naive benchmark as a runnable strategy.
#[derive(Debug, Clone)]
pub struct NaiveBenchmark {
    reference: StationaryPolicy,
    pub config: BenchmarkConfig,
}

impl NaiveBenchmark {
    pub fn new(reference: &ValueSurface, region: &ExecutionRegion, config: BenchmarkConfig) -> Result<Self> {
        config.validate()?;
        if reference.internal.order().is_some() {
            return Err(ModelError::InvalidParams(
                "benchmark reference must be solved without an internal exchange".into(),
            ));
        }
        Ok(Self {
            reference: stationary_policy(reference, region),
            config,
        })
    }

    pub fn reference(&self) -> &StationaryPolicy {
        &self.reference
    }
}

impl Strategy for NaiveBenchmark {
    fn decide(&self, _t: f64, q: i64, l: u32) -> StrategyDecision {
        let base = self.reference.entry(q, 0);
        let execute_now = naive_decision(q, l);
        let ladder = if l >= 1 && !execute_now {
            vwap_adjusted_ask(&base.ladder, l, self.config.rho_tilde, self.config.iota).ladder
        } else {
            base.ladder
        };
        StrategyDecision {
            ladder,
            execute_now,
            clamped: base.clamped,
        }
    }
}
