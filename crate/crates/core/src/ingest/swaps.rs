use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use chrono::{DateTime, NaiveDate};
use log::warn;
use serde::Serialize;

use super::tick::{tick_at_sqrt_price, MAX_TICK, MIN_TICK};
use crate::error::{Error, Result};

pub const SWAP_COLUMNS: [&str; 10] = [
    "chain",
    "pool_id",
    "timestamp",
    "block",
    "tick",
    "sqrt_price",
    "liquidity",
    "amount0",
    "amount1",
    "fee_bps",
];

/// One exported swap. Amounts are decimals-normalized (token0 = WETH,
/// token1 = USDC in the pools of interest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapEvent {
    pub chain: String,
    pub pool_id: String,
    pub timestamp: i64,
    pub block: u64,
    pub log_index: Option<u64>,
    pub tick: i32,
    pub sqrt_price: f64,
    pub liquidity: f64,
    pub amount0: f64,
    pub amount1: f64,
    pub fee_bps: u32,
}

impl SwapEvent {
    /// UTC calendar day of the swap.
    pub fn date(&self) -> NaiveDate {
        DateTime::from_timestamp(self.timestamp, 0)
            .map(|dt| dt.date_naive())
            .unwrap_or(NaiveDate::MIN)
    }

    pub fn fee(&self) -> f64 {
        f64::from(self.fee_bps) / 10_000.0
    }

    /// Orders by (timestamp, block, log index), then by the remaining fields
    /// so that the latest swap of a day is independent of input order.
    pub fn recency_cmp(&self, other: &Self) -> Ordering {
        self.timestamp
            .cmp(&other.timestamp)
            .then(self.block.cmp(&other.block))
            .then(self.log_index.cmp(&other.log_index))
            .then(self.tick.cmp(&other.tick))
            .then(self.sqrt_price.total_cmp(&other.sqrt_price))
            .then(self.liquidity.total_cmp(&other.liquidity))
            .then(self.amount0.total_cmp(&other.amount0))
            .then(self.amount1.total_cmp(&other.amount1))
    }

    fn dedup_key(&self) -> String {
        match self.log_index {
            Some(idx) => format!("{}\u{1f}{}\u{1f}{}\u{1f}{idx}", self.chain, self.pool_id, self.block),
            None => format!(
                "{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}",
                self.chain,
                self.pool_id,
                self.timestamp,
                self.block,
                self.tick,
                self.sqrt_price.to_bits(),
                self.liquidity.to_bits(),
                self.amount0.to_bits(),
                self.amount1.to_bits(),
                self.fee_bps
            ),
        }
    }
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub field: String,
    pub message: String,
}

impl From<RowError> for Error {
    fn from(e: RowError) -> Self {
        Error::Row {
            line: e.line,
            field: e.field,
            message: e.message,
        }
    }
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: field `{}`: {}", self.line, self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SwapParse {
    pub events: Vec<SwapEvent>,
    pub rejected: Vec<RowError>,
    pub duplicates: usize,
}

impl SwapParse {
    /// Fails on the first rejected row.
    pub fn into_strict(self) -> Result<Vec<SwapEvent>> {
        match self.rejected.into_iter().next() {
            Some(err) => Err(err.into()),
            None => Ok(self.events),
        }
    }
}

/// Tick spacing of a pool: the explicit override, else the standard
/// Uniswap v3 spacing for the fee tier (1 bp → 1, otherwise 2 per bp).
pub fn default_tick_spacing(fee_bps: u32, override_spacing: Option<u32>) -> u32 {
    match override_spacing {
        Some(s) => s.max(1),
        None if fee_bps <= 1 => 1,
        None => 2 * fee_bps,
    }
}

/// Parses a swaps export.
///
/// Header columns are matched by name; an optional `log_index` column refines
/// duplicate detection. Rows that fail to parse or whose tick is inconsistent
/// with their square-root price (by one tick spacing or more) are collected in
/// [`SwapParse::rejected`]; duplicates are dropped with a warning.
pub fn parse_swaps<R: Read>(reader: R, tick_spacing: Option<u32>) -> Result<SwapParse> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 10];
    for (slot, name) in index.iter_mut().zip(SWAP_COLUMNS) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::Row {
            line: 1,
            field: name.to_string(),
            message: "missing column in header".to_string(),
        })?;
    }
    let log_index_col = headers.iter().position(|h| h == "log_index");

    let mut out = SwapParse::default();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rejected.push(RowError {
                    line,
                    field: "?".to_string(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        match parse_row(&record, line, &index, log_index_col, tick_spacing) {
            Ok(event) => {
                if seen.insert(event.dedup_key()) {
                    out.events.push(event);
                } else {
                    warn!(
                        "line {line}: duplicate swap for {}/{} block {} dropped",
                        event.chain, event.pool_id, event.block
                    );
                    out.duplicates += 1;
                }
            }
            Err(err) => out.rejected.push(err),
        }
    }
    Ok(out)
}

fn parse_row(
    record: &csv::StringRecord,
    line: u64,
    index: &[usize; 10],
    log_index_col: Option<usize>,
    tick_spacing: Option<u32>,
) -> std::result::Result<SwapEvent, RowError> {
    let err = |field: &str, message: String| RowError {
        line,
        field: field.to_string(),
        message,
    };
    let raw = |i: usize| record.get(index[i]).unwrap_or("");
    fn num<T: std::str::FromStr>(s: &str) -> Option<T> {
        s.parse().ok()
    }
    let parse = |i: usize| -> std::result::Result<f64, RowError> {
        let value: f64 = num(raw(i)).ok_or_else(|| err(SWAP_COLUMNS[i], format!("not a number: `{}`", raw(i))))?;
        if !value.is_finite() {
            return Err(err(SWAP_COLUMNS[i], "must be finite".to_string()));
        }
        Ok(value)
    };

    let chain = raw(0).to_string();
    if chain.is_empty() {
        return Err(err("chain", "empty".to_string()));
    }
    let pool_id = raw(1).to_string();
    if pool_id.is_empty() {
        return Err(err("pool_id", "empty".to_string()));
    }
    let timestamp: i64 = num(raw(2)).ok_or_else(|| err("timestamp", format!("not an integer: `{}`", raw(2))))?;
    if DateTime::from_timestamp(timestamp, 0).is_none() {
        return Err(err("timestamp", format!("out of range: {timestamp}")));
    }
    let block: u64 = num(raw(3)).ok_or_else(|| err("block", format!("not an integer: `{}`", raw(3))))?;
    let tick: i32 = num(raw(4)).ok_or_else(|| err("tick", format!("not an integer: `{}`", raw(4))))?;
    if !(MIN_TICK..=MAX_TICK).contains(&tick) {
        return Err(err("tick", format!("{tick} outside [{MIN_TICK}, {MAX_TICK}]")));
    }
    let sqrt_price = parse(5)?;
    if sqrt_price <= 0.0 {
        return Err(err("sqrt_price", format!("must be > 0, got {sqrt_price}")));
    }
    let liquidity = parse(6)?;
    if liquidity < 0.0 {
        return Err(err("liquidity", format!("must be >= 0, got {liquidity}")));
    }
    let amount0 = parse(7)?;
    let amount1 = parse(8)?;
    let fee_bps: u32 = num(raw(9)).ok_or_else(|| err("fee_bps", format!("not an integer: `{}`", raw(9))))?;
    if fee_bps > 10_000 {
        return Err(err("fee_bps", format!("must be <= 10000, got {fee_bps}")));
    }
    let log_index = match log_index_col.map(|c| record.get(c).unwrap_or("")) {
        None | Some("") => None,
        Some(s) => Some(num(s).ok_or_else(|| err("log_index", format!("not an integer: `{s}`")))?),
    };

    let spacing = default_tick_spacing(fee_bps, tick_spacing);
    let implied = tick_at_sqrt_price(sqrt_price);
    if (f64::from(tick) - implied).abs() >= f64::from(spacing) {
        return Err(err(
            "sqrt_price",
            format!("implies tick {implied:.2}, inconsistent with tick {tick} (spacing {spacing})"),
        ));
    }

    Ok(SwapEvent {
        chain,
        pool_id,
        timestamp,
        block,
        log_index,
        tick,
        sqrt_price,
        liquidity,
        amount0,
        amount1,
        fee_bps,
    })
}

pub type PoolDay = (String, String, NaiveDate);

/// Latest swap per (chain, pool, UTC day).
pub fn daily_last_swaps(events: &[SwapEvent]) -> BTreeMap<PoolDay, SwapEvent> {
    let mut out: BTreeMap<PoolDay, SwapEvent> = BTreeMap::new();
    for event in events {
        let key = (event.chain.clone(), event.pool_id.clone(), event.date());
        match out.get_mut(&key) {
            Some(current) if event.recency_cmp(current) == Ordering::Greater => *current = event.clone(),
            Some(_) => {}
            None => {
                out.insert(key, event.clone());
            }
        }
    }
    out
}
