use log::debug;

use super::{build_result, AllocOptions, AllocationResult, BISECTION_MAX_ITER, BISECTION_REL_TOL};
use crate::error::{Error, Result};
use crate::model::{LpConfig, Money, PoolState, Rate};

/// Single-pool optimum against staking: `max(0, TVL·(√(r0/r_s) − 1))`.
pub fn allocation_for_pool(tvl: Money, r0: Rate, staking_rate: Rate) -> Result<Money> {
    if staking_rate.value() <= 0.0 {
        return Err(Error::domain("staking rate must be > 0"));
    }
    if tvl.value() <= 0.0 {
        return Err(Error::domain("pool TVL must be > 0"));
    }
    Ok(Money::clamp(demand(tvl.value(), r0.value(), staking_rate.value(), 1)))
}

// m·max(0, T(√(r0/λ) − 1)), which equals m·max(0, √(F·T/λ) − T).
fn demand(tvl: f64, r0: f64, lambda: f64, m: u32) -> f64 {
    if r0 <= lambda {
        return 0.0;
    }
    f64::from(m) * tvl * ((r0 / lambda).sqrt() - 1.0)
}

fn total_demand(pools: &[PoolState], lambda: f64, opts: AllocOptions) -> f64 {
    pools
        .iter()
        .map(|p| demand(p.tvl.value(), p.initial_return().value(), lambda, opts.span(p)))
        .sum()
}

fn check_pools(pools: &[PoolState]) -> Result<()> {
    for pool in pools {
        pool.validate()?;
        if pool.tvl.value() <= 0.0 {
            return Err(Error::domain(format!(
                "pool {}: TVL must be > 0 for allocation",
                pool.pool_id
            )));
        }
        let fees = pool.annual_fees();
        if !fees.is_finite() || fees < 0.0 {
            return Err(Error::domain(format!(
                "pool {}: fee income must be finite",
                pool.pool_id
            )));
        }
    }
    Ok(())
}

/// Optimal allocation with default options (allocation on current-tick TVL).
pub fn optimal_allocation(pools: &[PoolState], cfg: &LpConfig) -> Result<AllocationResult> {
    optimal_allocation_with(pools, cfg, AllocOptions::default())
}

pub fn optimal_allocation_with(pools: &[PoolState], cfg: &LpConfig, opts: AllocOptions) -> Result<AllocationResult> {
    check_pools(pools)?;
    let rs = cfg.staking_rate.value();
    if rs <= 0.0 {
        return Err(Error::domain("staking rate must be > 0"));
    }
    let wealth = cfg.wealth.value();

    let unconstrained: Vec<f64> = pools
        .iter()
        .map(|p| demand(p.tvl.value(), p.initial_return().value(), rs, opts.span(p)))
        .collect();
    let wanted: f64 = unconstrained.iter().sum();

    if wanted <= wealth {
        let staking = wealth - wanted;
        return Ok(build_result(
            pools,
            &unconstrained,
            staking,
            rs,
            cfg.staking_rate,
            false,
            opts,
        ));
    }

    let lambda = water_fill_lambda_with(pools, cfg.wealth, cfg.staking_rate, opts)?.value();
    let mut allocations: Vec<f64> = pools
        .iter()
        .map(|p| demand(p.tvl.value(), p.initial_return().value(), lambda, opts.span(p)))
        .collect();
    // Absorb the bisection residual so the budget identity holds.
    let sum: f64 = allocations.iter().sum();
    if sum > 0.0 {
        let scale = wealth / sum;
        allocations.iter_mut().for_each(|w| *w *= scale);
    }
    Ok(build_result(
        pools,
        &allocations,
        0.0,
        lambda,
        cfg.staking_rate,
        true,
        opts,
    ))
}

/// Multiplier `λ* ≥ r_s` at which the pools' combined demand equals `wealth`.
///
/// Requires the demand at `λ = r_s` to exceed `wealth`. Bisects on
/// `[r_s, max r_i(0)]` until the demand is within `1e-9·W` of `W`, then
/// polishes `λ` in closed form on the resulting active set:
/// `√λ = Σ m_i√(F_i T_i) / (W + Σ m_i T_i)`.
pub fn water_fill_lambda(pools: &[PoolState], wealth: Money, staking_rate: Rate) -> Result<Rate> {
    water_fill_lambda_with(pools, wealth, staking_rate, AllocOptions::default())
}

pub(crate) fn water_fill_lambda_with(
    pools: &[PoolState],
    wealth: Money,
    staking_rate: Rate,
    opts: AllocOptions,
) -> Result<Rate> {
    check_pools(pools)?;
    let rs = staking_rate.value();
    if rs <= 0.0 {
        return Err(Error::domain("staking rate must be > 0"));
    }
    let w = wealth.value();
    if total_demand(pools, rs, opts) <= w {
        return Err(Error::Contract(format!(
            "water-filling needs demand at r_s above the budget {w}"
        )));
    }

    let max_r0 = pools.iter().map(|p| p.initial_return().value()).fold(rs, f64::max);
    if w == 0.0 {
        return Rate::new(max_r0);
    }

    let (mut lo, mut hi) = (rs, max_r0);
    let mut lambda = 0.5 * (lo + hi);
    let mut iterations = 0;
    while iterations < BISECTION_MAX_ITER {
        iterations += 1;
        lambda = 0.5 * (lo + hi);
        let excess = total_demand(pools, lambda, opts) - w;
        if excess.abs() <= BISECTION_REL_TOL * w {
            break;
        }
        if excess > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    debug!("water-filling bisection: lambda={lambda} after {iterations} iterations");

    let polished = polish(pools, w, lambda, opts);
    Rate::new(polished.unwrap_or(lambda))
}

// Exact λ for the active set {r_i(0) > λ}, kept only if it reproduces that set.
fn polish(pools: &[PoolState], w: f64, lambda: f64, opts: AllocOptions) -> Option<f64> {
    let mut num = 0.0;
    let mut den = w;
    for pool in pools.iter().filter(|p| p.initial_return().value() > lambda) {
        let m = f64::from(opts.span(pool));
        let t = pool.tvl.value();
        num += m * (pool.annual_fees() * t).sqrt();
        den += m * t;
    }
    if num <= 0.0 {
        return None;
    }
    let exact = (num / den).powi(2);
    let same_set = pools.iter().all(|p| {
        let r0 = p.initial_return().value();
        (r0 > lambda) == (r0 > exact)
    });
    same_set.then_some(exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::verify_kkt;
    use crate::model::cpmm_return;

    fn money(v: f64) -> Money {
        Money::new(v).unwrap()
    }

    fn rate(v: f64) -> Rate {
        Rate::new(v).unwrap()
    }

    fn example_pool() -> PoolState {
        PoolState::new("eth", "example", 1.0, 400_000.0, 4_000_000.0)
            .unwrap()
            .with_annualization_days(1)
    }

    // Brute-force maximizer of r_s(W-w) + F w/(T+w) over a fine grid on [0, W].
    fn grid_argmax(fees: f64, tvl: f64, rs: f64, wealth: f64, steps: usize) -> f64 {
        (0..=steps)
            .map(|k| wealth * k as f64 / steps as f64)
            .map(|w| (w, rs * (wealth - w) + fees * w / (tvl + w)))
            .fold((0.0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0
    }

    #[test]
    fn single_pool_matches_grid_search() {
        let w = allocation_for_pool(money(4_000_000.0), rate(0.10), rate(0.0342)).unwrap();
        assert!((w.value() - 2_839_856.0).abs() <= 1.0);
        // Grid over [0, 10^7] at step 1.
        let oracle = grid_argmax(400_000.0, 4_000_000.0, 0.0342, 10_000_000.0, 10_000_000);
        assert!(
            (w.value() - oracle).abs() <= 1.0,
            "closed form {} vs grid {oracle}",
            w.value()
        );
    }

    #[test]
    fn allocation_for_pool_edge_cases() {
        assert_eq!(
            allocation_for_pool(money(1e6), rate(0.05), rate(0.05)).unwrap(),
            Money::ZERO
        );
        assert_eq!(
            allocation_for_pool(money(1e6), rate(0.01), rate(0.05)).unwrap(),
            Money::ZERO
        );
        assert!(allocation_for_pool(money(1e6), rate(0.05), Rate::ZERO).is_err());
    }

    #[test]
    fn table1_arbitrum_row() {
        let w = allocation_for_pool(money(87_534.74), rate(0.1343), rate(0.0347)).unwrap();
        assert!((w.value() - 84_699.60).abs() / 84_699.60 < 2e-3);
        assert!((w.value() - 84_673.7).abs() < 0.5);
    }

    #[test]
    fn below_staking_pool_gets_nothing() {
        let pool = PoolState::new("eth", "p", 1.0, 100.0, 10_000.0)
            .unwrap()
            .with_annualization_days(1);
        let cfg = LpConfig::new(1_000.0, 0.02).unwrap();
        let res = optimal_allocation(&[pool], &cfg).unwrap();
        assert_eq!(res.pools[0].allocation, Money::ZERO);
        assert_eq!(res.staking.value(), 1_000.0);
        assert!((res.total_earnings.value() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn binding_budget_goes_all_in() {
        let cfg = LpConfig::new(1_000_000.0, 0.0342).unwrap();
        let res = optimal_allocation(&[example_pool()], &cfg).unwrap();
        assert!(res.budget_binding);
        assert_eq!(res.pools[0].allocation.value(), 1_000_000.0);
        assert_eq!(res.staking, Money::ZERO);
        assert!((res.multiplier.value() - 0.064).abs() < 1e-15);
        assert!(verify_kkt(&[example_pool()], &res, &cfg, 1e-8));
    }

    #[test]
    fn water_fill_one_pool_inverts_marginal() {
        let lambda = water_fill_lambda(&[example_pool()], money(1_000_000.0), rate(0.0342)).unwrap();
        let closed = 400_000.0 * 4_000_000.0 / 5_000_000f64.powi(2);
        assert!((lambda.value() - closed).abs() <= 1e-15);
    }

    #[test]
    fn water_fill_symmetric_pools_split_evenly() {
        let a = PoolState::new("arb", "a", 0.0005, 1e6, 1e5).unwrap();
        let b = PoolState {
            pool_id: "b".into(),
            ..a.clone()
        };
        let cfg = LpConfig::new(50_000.0, 0.0347).unwrap();
        let res = optimal_allocation(&[a.clone(), b.clone()], &cfg).unwrap();
        assert!(res.budget_binding);
        let (wa, wb) = (res.pools[0].allocation.value(), res.pools[1].allocation.value());
        assert!((wa - 25_000.0).abs() < 1e-6 && (wb - 25_000.0).abs() < 1e-6);
        assert!(verify_kkt(&[a, b], &res, &cfg, 1e-8));
    }

    #[test]
    fn water_fill_approaches_staking_rate_at_boundary() {
        let pool = example_pool();
        let demand_at_rs = allocation_for_pool(pool.tvl, pool.initial_return(), rate(0.0342)).unwrap();
        let lambda = water_fill_lambda(&[pool], money(demand_at_rs.value() * (1.0 - 1e-9)), rate(0.0342)).unwrap();
        assert!((lambda.value() - 0.0342).abs() / 0.0342 < 1e-8);
    }

    #[test]
    fn water_fill_rejects_slack_budget() {
        let err = water_fill_lambda(&[example_pool()], money(1e9), rate(0.0342)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn empty_pool_list_stakes_everything() {
        let cfg = LpConfig::new(1e6, 0.03).unwrap();
        let res = optimal_allocation(&[], &cfg).unwrap();
        assert_eq!(res.staking.value(), 1e6);
        assert!((res.total_earnings.value() - 30_000.0).abs() < 1e-9);
    }

    #[test]
    fn zero_wealth_allocates_nothing() {
        let cfg = LpConfig::new(0.0, 0.0342).unwrap();
        let res = optimal_allocation(&[example_pool()], &cfg).unwrap();
        assert_eq!(res.pools[0].allocation, Money::ZERO);
        assert!(verify_kkt(&[example_pool()], &res, &cfg, 1e-8));
    }

    #[test]
    fn geometric_mean_return_at_optimum() {
        let cfg = LpConfig::new(1e9, 0.0342).unwrap();
        let pool = example_pool();
        let res = optimal_allocation(std::slice::from_ref(&pool), &cfg).unwrap();
        let r = cpmm_return(&pool, res.pools[0].allocation).unwrap().value();
        let expected = (0.10f64 * 0.0342).sqrt();
        assert!((r - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn tick_scaling_multiplies_allocation_by_m() {
        let pool = PoolState::new("base", "p", 0.0005, 1e6, 1e5)
            .unwrap()
            .with_tick_count(7);
        let cfg = LpConfig::new(1e12, 0.0347).unwrap();
        let plain = optimal_allocation(std::slice::from_ref(&pool), &cfg).unwrap();
        let scaled =
            optimal_allocation_with(std::slice::from_ref(&pool), &cfg, AllocOptions { scale_by_ticks: true }).unwrap();
        let ratio = scaled.pools[0].allocation.value() / plain.pools[0].allocation.value();
        assert!((ratio - 7.0).abs() < 1e-12);
        assert!(verify_kkt(std::slice::from_ref(&pool), &scaled, &cfg, 1e-10));
    }

    #[test]
    fn rejects_zero_tvl_pool() {
        let pool = PoolState::new("eth", "p", 0.0005, 1e6, 0.0).unwrap();
        let cfg = LpConfig::new(1e6, 0.03).unwrap();
        assert!(optimal_allocation(&[pool], &cfg).is_err());
    }
}
