//! Model constants: the OTC fill model, penalties, and the internal-exchange order model.
//!
//! Every price quantity (depths, offsets, fees, `sigma`) is in one common price unit,
//! the inverse of the unit `kappa` is measured in. Nothing here converts to currency.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Which side of the dealer's ladder a quote or fill belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Dealer buys `z` from a client; inventory goes up.
    Bid,
    /// Dealer sells `z` to a client; inventory goes down.
    Ask,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Bid, Side::Ask];

    /// Inventory change of a size-`z` fill on this side.
    pub fn inventory_step(self, size: u32) -> i64 {
        match self {
            Side::Bid => size as i64,
            Side::Ask => -(size as i64),
        }
    }
}

/// Fill model for one order size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBucket {
    pub size: u32,
    pub lambda_bid: f64,
    pub lambda_ask: f64,
    pub kappa: f64,
}

impl SizeBucket {
    pub fn lambda(&self, side: Side) -> f64 {
        match side {
            Side::Bid => self.lambda_bid,
            Side::Ask => self.lambda_ask,
        }
    }
}

/// External OTC market and penalty constants. Missing fields deserialize to the desk
/// calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketParams {
    /// Mid-price volatility per square-root second. The value function does not depend
    /// on it; the simulator does.
    pub sigma: f64,
    /// Size ladder, strictly increasing by `size`.
    pub buckets: Vec<SizeBucket>,
    /// Terminal inventory penalty.
    pub alpha: f64,
    /// Running inventory penalty per second.
    pub phi: f64,
    /// Running penalty per unit of unfilled internal liquidity per second.
    pub psi: f64,
    /// Horizon in seconds.
    pub horizon: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        if self.buckets.is_empty() {
            return bad("size ladder is empty".into());
        }
        if self.buckets[0].size < 1 {
            return bad("smallest order size must be at least 1".into());
        }
        for pair in self.buckets.windows(2) {
            if pair[1].size <= pair[0].size {
                return bad(format!(
                    "sizes must be strictly increasing ({} then {})",
                    pair[0].size, pair[1].size
                ));
            }
        }
        for b in &self.buckets {
            if !(b.lambda_bid > 0.0 && b.lambda_ask > 0.0 && b.kappa > 0.0)
                || !(b.lambda_bid.is_finite() && b.lambda_ask.is_finite() && b.kappa.is_finite())
            {
                return bad(format!("intensities and kappa for size {} must be positive", b.size));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("phi", self.phi), ("psi", self.psi), ("sigma", self.sigma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        Ok(())
    }

    pub fn sizes(&self) -> impl Iterator<Item = u32> + '_ {
        self.buckets.iter().map(|b| b.size)
    }

    pub fn bucket(&self, size: u32) -> Result<&SizeBucket> {
        self.buckets
            .iter()
            .find(|b| b.size == size)
            .ok_or(ModelError::UnknownSize(size))
    }

    /// Sum of base intensities over both sides and all sizes.
    pub fn total_base_intensity(&self) -> f64 {
        self.buckets.iter().map(|b| b.lambda_bid + b.lambda_ask).sum()
    }

    /// Market constants calibrated for the GBPUSD desk study. `sigma` defaults to 1 since
    /// the study never states it.
    pub fn desk_calibration() -> Self {
        let bucket = |size, lambda, kappa| SizeBucket {
            size,
            lambda_bid: lambda,
            lambda_ask: lambda,
            kappa,
        };
        Self {
            sigma: 1.0,
            buckets: vec![bucket(1, 0.2, 1.5), bucket(5, 0.005, 1.0), bucket(10, 0.001, 0.5)],
            alpha: 0.001,
            phi: 0.001,
            psi: 0.01,
            horizon: 300.0,
        }
    }
}

impl Default for MarketParams {
    fn default() -> Self {
        Self::desk_calibration()
    }
}

/// Fill intensity `lambda * exp(-kappa * delta)` for a quote at half-spread `delta`.
pub fn fill_intensity(side: Side, size: u32, delta: f64, params: &MarketParams) -> Result<f64> {
    let b = params.bucket(size)?;
    Ok(b.lambda(side) * (-b.kappa * delta).exp())
}

/// Internal-exchange order model: one resting client sell order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalOrderParams {
    /// Initial and replenished visible size.
    pub lbar: u32,
    /// Cancellation intensity.
    pub nu: f64,
    /// Arrival intensity while no order is present.
    pub mu: f64,
    /// Probability the order is replenished right after its last unit is taken.
    pub p: f64,
    /// Client price offset from mid.
    pub rho_tilde: f64,
    /// Fee per unit paid to the dealer.
    pub xi: f64,
}

impl InternalOrderParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        if self.lbar < 1 {
            return bad("lbar must be at least 1".into());
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) || !(self.mu >= 0.0 && self.mu.is_finite()) {
            return bad(format!("nu and mu must be >= 0, got {} and {}", self.nu, self.mu));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) || !self.rho_tilde.is_finite() {
            return bad(format!("xi must be >= 0 and rho_tilde finite, got {} and {}", self.xi, self.rho_tilde));
        }
        Ok(())
    }

    /// Price the dealer pays relative to mid, net of the fee.
    pub fn effective_offset(&self) -> f64 {
        effective_offset(self)
    }
}

pub fn effective_offset(params: &InternalOrderParams) -> f64 {
    params.rho_tilde - params.xi
}

/// Whether the internal exchange exists at all.
///
/// `Disabled` is the plain multi-size Avellaneda–Stoikov market: liquidity is
/// identically zero and the value function has a single `l` slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InternalExchange {
    Disabled,
    Enabled(InternalOrderParams),
}

impl InternalExchange {
    pub fn order(&self) -> Option<&InternalOrderParams> {
        match self {
            InternalExchange::Disabled => None,
            InternalExchange::Enabled(p) => Some(p),
        }
    }

    /// Largest liquidity level the order can show (0 when disabled).
    pub fn max_liquidity(&self) -> u32 {
        self.order().map_or(0, |p| p.lbar)
    }

    pub fn validate(&self) -> Result<()> {
        self.order().map_or(Ok(()), InternalOrderParams::validate)
    }
}

/// Client placement algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Iceberg,
    #[serde(rename = "twap")]
    Twap,
    FullAmount,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 3] = [ScenarioName::Iceberg, ScenarioName::Twap, ScenarioName::FullAmount];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Iceberg => "iceberg",
            ScenarioName::Twap => "twap",
            ScenarioName::FullAmount => "full_amount",
        }
    }
}

impl std::fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iceberg" => Ok(ScenarioName::Iceberg),
            "twap" => Ok(ScenarioName::Twap),
            "full_amount" | "fullamount" | "fa" => Ok(ScenarioName::FullAmount),
            other => Err(ModelError::InvalidParams(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Order model for a named client algorithm. `rho_tilde` and `xi` pass through.
pub fn scenario_preset(name: ScenarioName, rho_tilde: f64, xi: f64) -> InternalOrderParams {
    let (lbar, mu, p) = match name {
        ScenarioName::Iceberg => (1, 0.0, 0.9),
        ScenarioName::Twap => (1, 0.05, 0.0),
        ScenarioName::FullAmount => (10, 0.0, 0.0),
    };
    InternalOrderParams {
        lbar,
        nu: 0.001,
        mu,
        p,
        rho_tilde,
        xi,
    }
}
