//! Allocation reports in csv, json and table form.

use std::fmt::Write as _;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use lp_alloc::allocator::AllocationResult;
use lp_alloc::model::{LpConfig, PoolState};

/// Footnote attached to every allocation report.
pub const LP_RETURN_NOTE: &str = "LP return is model-implied: with staking funded, each funded pool ends at \
sqrt(r(0) * r_s). Reference LP-return figures circulated for the 2024-04-30 dataset sit 0.2-0.5 pp below \
this (Arbitrum 6.62% vs 6.83% model); their formula is undocumented and they are not reproduced.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub command: String,
    pub version: String,
    pub solver: String,
    pub staking_rate: f64,
    pub wealth: f64,
    pub scale_by_ticks: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRow {
    pub chain: String,
    pub pool_id: String,
    pub tvl_usd: f64,
    pub daily_volume_usd: f64,
    #[serde(rename = "return")]
    pub initial_return: f64,
    pub allocation_usd: f64,
    pub post_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub staking_usd: f64,
    pub lambda: f64,
    pub total_earnings_usd: f64,
    pub budget_binding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub meta: Meta,
    pub rows: Vec<PoolRow>,
    pub summary: Summary,
    pub notes: Vec<String>,
}

impl AllocationReport {
    pub fn new(meta: Meta, pools: &[PoolState], cfg: &LpConfig, result: &AllocationResult) -> Self {
        let rows = pools
            .iter()
            .zip(&result.pools)
            .map(|(pool, entry)| PoolRow {
                chain: pool.chain.clone(),
                pool_id: pool.pool_id.clone(),
                tvl_usd: pool.tvl.value(),
                daily_volume_usd: pool.daily_volume.value(),
                initial_return: pool.initial_return().value(),
                allocation_usd: entry.allocation.value(),
                post_return: entry.post_return.value(),
            })
            .collect();
        let mut notes = Vec::new();
        if result.pools.iter().all(|p| p.allocation.value() == 0.0) {
            notes.push(format!(
                "No pool returns more than the staking rate of {:.2}%; everything is staked.",
                cfg.staking_rate.percent()
            ));
        }
        if result.budget_binding {
            notes.push(format!(
                "Budget binds: pools are filled until their marginal return equals lambda = {:.4}%.",
                result.multiplier.percent()
            ));
        }
        notes.push(LP_RETURN_NOTE.to_string());
        AllocationReport {
            meta,
            rows,
            summary: Summary {
                staking_usd: result.staking.value(),
                lambda: result.multiplier.value(),
                total_earnings_usd: result.total_earnings.value(),
                budget_binding: result.budget_binding,
            },
            notes,
        }
    }

    /// Pool rows followed by `staking`, `lambda` and `total_earnings` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record([
            "chain",
            "pool_id",
            "tvl_usd",
            "daily_volume_usd",
            "return",
            "allocation_usd",
            "post_return",
        ])?;
        for r in &self.rows {
            wtr.write_record([
                r.chain.clone(),
                r.pool_id.clone(),
                r.tvl_usd.to_string(),
                r.daily_volume_usd.to_string(),
                r.initial_return.to_string(),
                r.allocation_usd.to_string(),
                r.post_return.to_string(),
            ])?;
        }
        let rs = self.meta.staking_rate.to_string();
        let s = &self.summary;
        wtr.write_record([
            "staking",
            "",
            "",
            "",
            rs.as_str(),
            &s.staking_usd.to_string(),
            rs.as_str(),
        ])?;
        wtr.write_record(["lambda", "", "", "", &s.lambda.to_string(), "", ""])?;
        wtr.write_record(["total_earnings", "", "", "", "", &s.total_earnings_usd.to_string(), ""])?;
        Ok(String::from_utf8(wtr.into_inner()?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Human-readable layout: percentages to two decimals, `-` for unfunded pools.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<16} {:>16} {:>18} {:>10} {:>14} {:>13}",
            "Chain", "Pool", "TVL", "Daily Volume", "Return (%)", "Allocation", "LP Return (%)"
        );
        for r in &self.rows {
            let (alloc, lp) = if r.allocation_usd > 0.0 {
                (
                    format!("{:.2}", r.allocation_usd),
                    format!("{:.2}", r.post_return * 100.0),
                )
            } else {
                ("-".to_string(), "-".to_string())
            };
            let _ = writeln!(
                out,
                "{:<12} {:<16} {:>16.2} {:>18.2} {:>10.2} {:>14} {:>13}",
                r.chain,
                r.pool_id,
                r.tvl_usd,
                r.daily_volume_usd,
                r.initial_return * 100.0,
                alloc,
                lp
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Staking: {:.2} at {:.2}%   lambda: {:.4}%   total earnings: {:.2}/yr",
            self.summary.staking_usd,
            self.meta.staking_rate * 100.0,
            self.summary.lambda * 100.0,
            self.summary.total_earnings_usd
        );
        for (i, note) in self.notes.iter().enumerate() {
            let _ = writeln!(out, "[{}] {note}", i + 1);
        }
        out
    }

    pub fn render(&self, format: crate::Format) -> Result<String> {
        match format {
            crate::Format::Csv => self.to_csv(),
            crate::Format::Json => self.to_json(),
            crate::Format::Table => Ok(self.to_table()),
        }
    }
}
