use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::swaps::{daily_last_swaps, default_tick_spacing, PoolDay, SwapEvent};
use super::tick::{tick_tvl, ticks_in_range};
use crate::error::{Error, Result};
use crate::model::{Money, PoolState, Rate, DEFAULT_ANNUALIZATION_DAYS};

pub const SNAPSHOT_COLUMNS: [&str; 8] = [
    "chain",
    "pool_id",
    "date",
    "tick_tvl_usd",
    "daily_volume_usd",
    "annualized_return",
    "m",
    "concentration",
];

/// Parameters of the daily snapshot methodology.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodologyParams {
    /// Overrides the fee-tier tick spacing for every pool.
    pub tick_spacing: Option<u32>,
    /// Half-width of the LP's band around spot (0.12 = ±12%).
    pub range_fraction: f64,
    /// Concentration factor applied to every chain not listed in `l1_chains`.
    pub l2_concentration: f64,
    /// Chains valued with concentration 1.0, compared case-insensitively.
    pub l1_chains: Vec<String>,
    pub annualization_days: u32,
    /// Multiplies tick TVL to give the effective TVL behind the return.
    pub effective_tvl_multiplier: f64,
    /// Token0 USD price; `None` prices it from the swap's own `sqrt_price²`.
    pub usd_price_token0: Option<f64>,
    pub usd_price_token1: f64,
}

impl Default for MethodologyParams {
    fn default() -> Self {
        MethodologyParams {
            tick_spacing: None,
            range_fraction: 0.12,
            l2_concentration: 1.75,
            l1_chains: vec!["ethereum".to_string()],
            annualization_days: DEFAULT_ANNUALIZATION_DAYS,
            effective_tvl_multiplier: 1.0,
            usd_price_token0: None,
            usd_price_token1: 1.0,
        }
    }
}

impl MethodologyParams {
    pub fn concentration_for(&self, chain: &str) -> f64 {
        if self.l1_chains.iter().any(|c| c.eq_ignore_ascii_case(chain)) {
            1.0
        } else {
            self.l2_concentration
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.l2_concentration.is_finite() && self.l2_concentration > 0.0) {
            return Err(Error::domain("concentration must be > 0"));
        }
        if !(self.effective_tvl_multiplier.is_finite() && self.effective_tvl_multiplier > 0.0) {
            return Err(Error::domain("effective TVL multiplier must be > 0"));
        }
        if self.annualization_days == 0 {
            return Err(Error::domain("annualization_days must be >= 1"));
        }
        Ok(())
    }
}

/// Per-pool, per-day state derived from the day's last swap and summed volume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolSnapshot {
    pub chain: String,
    pub pool_id: String,
    pub date: NaiveDate,
    pub tick_tvl_usd: Money,
    pub daily_volume_usd: Money,
    pub annualized_return: Rate,
    pub tick_count: u32,
    pub concentration: f64,
}

impl PoolSnapshot {
    /// A snapshot with no TVL in the current tick cannot be allocated to.
    pub fn usable(&self) -> bool {
        self.tick_tvl_usd.value() > 0.0
    }

    /// The snapshot as an allocator input, with its return pinned.
    pub fn to_pool_state(&self, annualization_days: u32) -> Result<PoolState> {
        let tvl = self.tick_tvl_usd.value();
        let volume = self.daily_volume_usd.value();
        let fee = if volume > 0.0 {
            (self.annualized_return.value() * tvl / (volume * f64::from(annualization_days))).min(1.0)
        } else {
            0.0
        };
        Ok(
            PoolState::new(self.chain.clone(), self.pool_id.clone(), fee, volume, tvl)?
                .with_tick_count(self.tick_count.max(1))
                .with_annualization_days(annualization_days)
                .with_return_override(self.annualized_return),
        )
    }
}

/// USD value of a swap's volume, taken on the token1 side.
pub fn swap_volume_usd(event: &SwapEvent, usd_price_token1: f64) -> f64 {
    event.amount1.abs() * usd_price_token1
}

pub fn pool_snapshot(last_swap: &SwapEvent, day_volume_usd: Money, params: &MethodologyParams) -> Result<PoolSnapshot> {
    params.validate()?;
    let spacing = default_tick_spacing(last_swap.fee_bps, params.tick_spacing);
    let price0 = params
        .usd_price_token0
        .unwrap_or(last_swap.sqrt_price * last_swap.sqrt_price);
    let tvl = tick_tvl(
        last_swap.liquidity,
        last_swap.tick,
        last_swap.sqrt_price,
        spacing,
        Money::new(price0)?,
        Money::new(params.usd_price_token1)?,
    )?;

    let concentration = params.concentration_for(&last_swap.chain);
    let ticks = ticks_in_range(params.range_fraction, spacing)?;
    let tick_count = ((f64::from(ticks) / concentration).ceil() as u32).max(1);

    let effective_tvl = tvl.value() * params.effective_tvl_multiplier;
    let annualized_return = if effective_tvl > 0.0 {
        last_swap.fee() * day_volume_usd.value() * f64::from(params.annualization_days) / effective_tvl
    } else {
        0.0
    };

    Ok(PoolSnapshot {
        chain: last_swap.chain.clone(),
        pool_id: last_swap.pool_id.clone(),
        date: last_swap.date(),
        tick_tvl_usd: tvl,
        daily_volume_usd: day_volume_usd,
        annualized_return: Rate::new(annualized_return)?,
        tick_count,
        concentration,
    })
}

/// Runs the whole pipeline: daily last swap, summed daily volume, snapshot.
/// Output is sorted by (chain, pool_id, date).
pub fn build_snapshots(events: &[SwapEvent], params: &MethodologyParams) -> Result<Vec<PoolSnapshot>> {
    let mut volumes: BTreeMap<PoolDay, f64> = BTreeMap::new();
    for event in events {
        let key = (event.chain.clone(), event.pool_id.clone(), event.date());
        *volumes.entry(key).or_default() += swap_volume_usd(event, params.usd_price_token1);
    }
    daily_last_swaps(events)
        .iter()
        .map(|(key, last)| {
            let volume = volumes.get(key).copied().unwrap_or(0.0);
            pool_snapshot(last, Money::new(volume)?, params)
        })
        .collect()
}

pub fn write_snapshots<W: Write>(out: W, snapshots: &[PoolSnapshot]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SNAPSHOT_COLUMNS)?;
    for s in snapshots {
        wtr.write_record([
            s.chain.clone(),
            s.pool_id.clone(),
            s.date.format("%Y-%m-%d").to_string(),
            s.tick_tvl_usd.value().to_string(),
            s.daily_volume_usd.value().to_string(),
            s.annualized_return.value().to_string(),
            s.tick_count.to_string(),
            s.concentration.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SnapshotRow {
    chain: String,
    pool_id: String,
    date: NaiveDate,
    tick_tvl_usd: f64,
    daily_volume_usd: f64,
    annualized_return: f64,
    m: u32,
    concentration: f64,
}

pub fn read_snapshots<R: Read>(reader: R) -> Result<Vec<PoolSnapshot>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let row: SnapshotRow = record.deserialize(Some(&headers)).map_err(|e| Error::Row {
            line,
            field: crate::model::csv_field_name(&e, &headers),
            message: e.to_string(),
        })?;
        let row_err = |field: &str, e: Error| Error::Row {
            line,
            field: field.to_string(),
            message: e.to_string(),
        };
        out.push(PoolSnapshot {
            chain: row.chain,
            pool_id: row.pool_id,
            date: row.date,
            tick_tvl_usd: Money::new(row.tick_tvl_usd).map_err(|e| row_err("tick_tvl_usd", e))?,
            daily_volume_usd: Money::new(row.daily_volume_usd).map_err(|e| row_err("daily_volume_usd", e))?,
            annualized_return: Rate::new(row.annualized_return).map_err(|e| row_err("annualized_return", e))?,
            tick_count: row.m,
            concentration: row.concentration,
        });
    }
    Ok(out)
}
