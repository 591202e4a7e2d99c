//! Rates, money, pool state and the per-pool return functions.
//!
//! A pool earns `f * Vol` in fees per period. An LP adding capital `w` to a
//! pool with effective TVL `T` receives the pro-rata share, so her return rate
//! is `f * Vol / (T + w)` for a constant-product pool. For a concentrated
//! liquidity pool `T` is the TVL in the current tick and unbounded capital
//! spread over `m` ticks only contributes `w / m` to it.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Days per year used to annualize daily fees unless a pool says otherwise.
pub const DEFAULT_ANNUALIZATION_DAYS: u32 = 365;

/// A non-negative per-year rate expressed as a fraction (0.0347 = 3.47%/yr).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rate(f64);

impl Rate {
    pub const ZERO: Rate = Rate(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::domain(format!("rate must be finite and >= 0, got {value}")));
        }
        Ok(Rate(value))
    }

    /// Builds a rate from a percentage (3.47 -> 0.0347).
    pub fn from_percent(pct: f64) -> Result<Self> {
        Rate::new(pct / 100.0)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn percent(self) -> f64 {
        self.0 * 100.0
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}%", self.percent())
    }
}

/// A non-negative USD amount.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(f64);

impl Money {
    pub const ZERO: Money = Money(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::domain(format!("money must be finite and >= 0, got {value}")));
        }
        Ok(Money(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    // Internal constructor for values that are non-negative by construction.
    #[inline]
    pub(crate) fn clamp(value: f64) -> Self {
        Money(value.max(0.0))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

/// One pool on one chain.
///
/// CPMM mode is `tick_count == 1` with full-range TVL; CLMM mode carries the
/// current-tick TVL and the number of ticks `m` the LP's capital spans.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    pub chain: String,
    pub pool_id: String,
    /// Fee per unit of volume (0.0005 = 5 bps).
    pub fee: f64,
    /// USD volume per day.
    pub daily_volume: Money,
    /// Effective TVL: full range (CPMM) or current tick (CLMM).
    pub tvl: Money,
    pub tick_count: u32,
    pub annualization_days: u32,
    /// When set, replaces the computed `r(0)`; annual fee income becomes
    /// `r(0) * tvl` so every downstream formula stays consistent.
    pub return_override: Option<Rate>,
}

impl PoolState {
    /// A CPMM-mode pool with the default 365-day annualization.
    pub fn new(
        chain: impl Into<String>,
        pool_id: impl Into<String>,
        fee: f64,
        daily_volume: f64,
        tvl: f64,
    ) -> Result<Self> {
        let pool = PoolState {
            chain: chain.into(),
            pool_id: pool_id.into(),
            fee,
            daily_volume: Money::new(daily_volume)?,
            tvl: Money::new(tvl)?,
            tick_count: 1,
            annualization_days: DEFAULT_ANNUALIZATION_DAYS,
            return_override: None,
        };
        pool.validate()?;
        Ok(pool)
    }

    pub fn with_tick_count(mut self, m: u32) -> Self {
        self.tick_count = m;
        self
    }

    pub fn with_annualization_days(mut self, days: u32) -> Self {
        self.annualization_days = days;
        self
    }

    pub fn with_return_override(mut self, r0: Rate) -> Self {
        self.return_override = Some(r0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fee) {
            return Err(Error::domain(format!(
                "pool {}: fee must lie in [0, 1], got {}",
                self.pool_id, self.fee
            )));
        }
        if self.tick_count == 0 {
            return Err(Error::domain(format!("pool {}: tick_count must be >= 1", self.pool_id)));
        }
        if self.annualization_days == 0 {
            return Err(Error::domain(format!(
                "pool {}: annualization_days must be >= 1",
                self.pool_id
            )));
        }
        Ok(())
    }

    /// Annual fee income used by the return and allocation formulas.
    pub fn annual_fees(&self) -> f64 {
        match self.return_override {
            Some(r0) => r0.value() * self.tvl.value(),
            None => pool_fees(self).value(),
        }
    }

    /// The displayed return `r(0)` (what aggregators show).
    pub fn initial_return(&self) -> Rate {
        match self.return_override {
            Some(r0) => r0,
            None if self.tvl.value() > 0.0 => Rate(self.annual_fees() / self.tvl.value()),
            None => Rate::ZERO,
        }
    }
}

/// The LP's budget and the risk-free staking rate of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig {
    pub wealth: Money,
    pub staking_rate: Rate,
}

impl LpConfig {
    pub fn new(wealth: f64, staking_rate: f64) -> Result<Self> {
        let cfg = LpConfig {
            wealth: Money::new(wealth)?,
            staking_rate: Rate::new(staking_rate)?,
        };
        if cfg.staking_rate.value() <= 0.0 {
            return Err(Error::domain("staking rate must be > 0"));
        }
        Ok(cfg)
    }
}

/// Annualized fees of the whole pool: `fee * daily_volume * annualization_days`.
pub fn pool_fees(pool: &PoolState) -> Money {
    Money::clamp(pool.fee * pool.daily_volume.value() * f64::from(pool.annualization_days))
}

/// Constant-product return after depositing `w`: `f·Vol / (TVL + w)`.
pub fn cpmm_return(pool: &PoolState, w: Money) -> Result<Rate> {
    return_with_span(pool, w, 1)
}

/// Concentrated-liquidity return after depositing `w` spread over the pool's
/// `tick_count` ticks: `f·Vol / (TVL_tick + w/m)`.
pub fn clmm_return(pool: &PoolState, w: Money) -> Result<Rate> {
    if pool.tick_count == 0 {
        return Err(Error::domain("tick_count must be >= 1"));
    }
    return_with_span(pool, w, pool.tick_count)
}

fn return_with_span(pool: &PoolState, w: Money, m: u32) -> Result<Rate> {
    let fees = pool.annual_fees();
    if !fees.is_finite() || fees < 0.0 {
        return Err(Error::domain(format!(
            "pool {}: fee income is not a finite non-negative value",
            pool.pool_id
        )));
    }
    let denom = pool.tvl.value() + w.value() / f64::from(m);
    if denom <= 0.0 {
        return Err(Error::domain(format!("pool {}: TVL + w must be > 0", pool.pool_id)));
    }
    Rate::new(fees / denom)
}

/// Annual LP earnings `f·Vol·w / (TVL + w/m)`.
pub fn lp_earnings(pool: &PoolState, w: f64, m: u32) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    pool.annual_fees() * w / (pool.tvl.value() + w / f64::from(m))
}

#[derive(Debug, Deserialize)]
struct PoolRow {
    chain: String,
    pool_id: String,
    fee_bps: f64,
    tvl_usd: f64,
    daily_volume_usd: f64,
    #[serde(default)]
    return_pct: Option<f64>,
}

/// Reads a pools file: `chain,pool_id,fee_bps,tvl_usd,daily_volume_usd[,return_pct]`.
pub fn read_pools<R: Read>(reader: R) -> Result<Vec<PoolState>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for required in ["chain", "pool_id", "fee_bps", "tvl_usd", "daily_volume_usd"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Row {
                line: 1,
                field: required.to_string(),
                message: "missing column in header".to_string(),
            });
        }
    }

    let mut pools = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row: PoolRow = record.deserialize(Some(&headers)).map_err(|e| Error::Row {
            line,
            field: csv_field_name(&e, &headers),
            message: e.to_string(),
        })?;
        let row_err = |field: &str, message: String| Error::Row {
            line,
            field: field.to_string(),
            message,
        };
        if !row.fee_bps.is_finite() || !(0.0..=10_000.0).contains(&row.fee_bps) {
            return Err(row_err(
                "fee_bps",
                format!("must lie in [0, 10000], got {}", row.fee_bps),
            ));
        }
        let mut pool = PoolState::new(
            row.chain,
            row.pool_id,
            row.fee_bps / 10_000.0,
            row.daily_volume_usd,
            row.tvl_usd,
        )
        .map_err(|e| row_err("tvl_usd/daily_volume_usd", e.to_string()))?;
        if let Some(pct) = row.return_pct {
            let r0 = Rate::from_percent(pct).map_err(|e| row_err("return_pct", e.to_string()))?;
            pool = pool.with_return_override(r0);
        }
        pools.push(pool);
    }
    Ok(pools)
}

pub(crate) fn csv_field_name(err: &csv::Error, headers: &csv::StringRecord) -> String {
    if let csv::ErrorKind::Deserialize { err, .. } = err.kind() {
        if let Some(idx) = err.field() {
            return headers.get(idx as usize).unwrap_or("?").to_string();
        }
    }
    "?".to_string()
}
