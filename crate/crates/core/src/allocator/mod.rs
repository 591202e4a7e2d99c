//! Splitting an LP's wealth `W` between staking and a set of pools.
//!
//! The LP maximizes `r_s·w_0 + Σ F_i·w_i / (T_i + w_i/m_i)` subject to
//! `w ≥ 0` and `w_0 + Σ w_i = W`, where `F_i` is the pool's annual fee income
//! and `T_i` its effective TVL. The objective is separable and concave, so the
//! KKT conditions characterize the optimum: every funded pool's marginal
//! return equals a common multiplier `λ`, unfunded pools have `r_i(0) ≤ λ`, and
//! `λ = r_s` whenever staking receives capital.
//!
//! Two solvers implement [`AllocationStrategy`]:
//!
//! - [`ClosedForm`] evaluates `w_i = T_i(√(r_i(0)/r_s) − 1)` clipped at zero,
//!   and switches to [`water_fill_lambda`] when the budget binds.
//! - [`GridOracle`] brute-forces the simplex and refines by pairwise
//!   golden-section ascent. It shares no code with the closed form beyond the
//!   pool's fee income and TVL.

mod closed_form;
mod kkt;
mod oracle;
mod registry;

use serde::Serialize;

pub use closed_form::{allocation_for_pool, optimal_allocation, optimal_allocation_with, water_fill_lambda};
pub use kkt::verify_kkt;
pub use oracle::oracle_maximize;
pub use registry::{AllocationStrategy, ClosedForm, GridOracle, StrategyParams, StrategyRegistry};

use crate::model::{Money, PoolState, Rate};

/// Relative tolerance on the allocation sum at which bisection stops.
pub const BISECTION_REL_TOL: f64 = 1e-9;
/// Hard cap on bisection iterations.
pub const BISECTION_MAX_ITER: usize = 200;

/// Solver switches shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AllocOptions {
    /// Treat capital as spread over the pool's `tick_count` ticks, so the
    /// allocation is the literal optimum of the CLMM earnings and scales by
    /// `m`. Off by default: the allocation is computed on current-tick TVL.
    pub scale_by_ticks: bool,
}

impl AllocOptions {
    pub(crate) fn span(&self, pool: &PoolState) -> u32 {
        if self.scale_by_ticks {
            pool.tick_count.max(1)
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolAllocation {
    pub chain: String,
    pub pool_id: String,
    pub allocation: Money,
    /// `r_i(w_i)`, the pool's return after the deposit.
    pub post_return: Rate,
}

/// The allocation vector together with its multiplier and earnings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    /// One entry per input pool, in input order.
    pub pools: Vec<PoolAllocation>,
    pub staking: Money,
    /// Lagrange multiplier `λ`: equals `r_s` unless the budget binds.
    pub multiplier: Rate,
    pub total_earnings: Money,
    pub budget_binding: bool,
    pub scale_by_ticks: bool,
}

impl AllocationResult {
    pub fn allocated(&self) -> f64 {
        self.pools.iter().map(|p| p.allocation.value()).sum()
    }

    pub fn allocation_of(&self, pool_id: &str) -> Option<Money> {
        self.pools.iter().find(|p| p.pool_id == pool_id).map(|p| p.allocation)
    }
}

/// Marginal earnings `F·T / (T + w/m)²` of a pool at deposit `w`.
pub(crate) fn marginal_return(pool: &PoolState, w: f64, m: u32) -> f64 {
    let t = pool.tvl.value();
    let d = t + w / f64::from(m);
    pool.annual_fees() * t / (d * d)
}

/// Return `F / (T + w/m)` after depositing `w`.
pub(crate) fn post_return(pool: &PoolState, w: f64, m: u32) -> Rate {
    let d = pool.tvl.value() + w / f64::from(m);
    if d > 0.0 {
        Rate::new(pool.annual_fees() / d).unwrap_or(Rate::ZERO)
    } else {
        Rate::ZERO
    }
}

pub(crate) fn build_result(
    pools: &[PoolState],
    allocations: &[f64],
    staking: f64,
    multiplier: f64,
    staking_rate: Rate,
    budget_binding: bool,
    opts: AllocOptions,
) -> AllocationResult {
    let mut total = staking_rate.value() * staking;
    let entries = pools
        .iter()
        .zip(allocations)
        .map(|(pool, &w)| {
            let m = opts.span(pool);
            total += crate::model::lp_earnings(pool, w, m);
            PoolAllocation {
                chain: pool.chain.clone(),
                pool_id: pool.pool_id.clone(),
                allocation: Money::clamp(w),
                post_return: post_return(pool, w, m),
            }
        })
        .collect();
    AllocationResult {
        pools: entries,
        staking: Money::clamp(staking),
        multiplier: Rate::new(multiplier).unwrap_or(Rate::ZERO),
        total_earnings: Money::clamp(total),
        budget_binding,
        scale_by_ticks: opts.scale_by_ticks,
    }
}
