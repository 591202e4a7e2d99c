use super::{marginal_return, AllocOptions, AllocationResult};
use crate::model::{LpConfig, PoolState};

/// Checks the KKT conditions of an allocation at relative tolerance `tol`.
///
/// Holds iff, with `λ` the result's multiplier:
/// (a) every funded pool has marginal return `F·T/(T + w/m)²` within `tol·λ` of `λ`;
/// (b) every unfunded pool has `r(0) ≤ λ(1 + tol)`;
/// (c) if staking is funded, `|λ − r_s| ≤ tol·r_s`;
/// (d) `λ ≥ r_s(1 − tol)`, since staking is always an available outlet.
///
/// Results whose pools do not line up with `pools`, or that break the budget
/// identity or non-negativity, are rejected outright.
pub fn verify_kkt(pools: &[PoolState], result: &AllocationResult, cfg: &LpConfig, tol: f64) -> bool {
    if pools.len() != result.pools.len() {
        return false;
    }
    let opts = AllocOptions {
        scale_by_ticks: result.scale_by_ticks,
    };
    let lambda = result.multiplier.value();
    let rs = cfg.staking_rate.value();
    let wealth = cfg.wealth.value();

    let total = result.staking.value() + result.allocated();
    if (total - wealth).abs() > 1e-9 * wealth.max(1.0) {
        return false;
    }

    for (pool, entry) in pools.iter().zip(&result.pools) {
        if pool.pool_id != entry.pool_id {
            return false;
        }
        let w = entry.allocation.value();
        if w < 0.0 {
            return false;
        }
        if w > 0.0 {
            let marginal = marginal_return(pool, w, opts.span(pool));
            if (marginal - lambda).abs() > tol * lambda {
                return false;
            }
        } else if pool.initial_return().value() > lambda * (1.0 + tol) {
            return false;
        }
    }

    if result.staking.value() > 0.0 && (lambda - rs).abs() > tol * rs {
        return false;
    }
    lambda >= rs * (1.0 - tol)
}
