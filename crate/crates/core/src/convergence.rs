//! Sequential LP entry into a single pool.
//!
//! Each LP in turn applies the closed-form allocation against the pool's
//! current TVL. The deposit raises TVL to `T·√(r/r_s)`, which sends the
//! displayed return to `√(r·r_s)` regardless of how much wealth the LP holds.
//! After `j` entrants the return is `r0^(1/2^j) · r_s^(1 − 1/2^j)`.

use std::io::Write;

use serde::Serialize;

use crate::allocator::allocation_for_pool;
use crate::error::{Error, Result};
use crate::model::{Money, PoolState, Rate};

/// Outcome of one application of the return recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReturn {
    pub rate: Rate,
    /// False when `r_prev < r_s`: nobody deposits and the rate is unchanged.
    pub allocated: bool,
}

/// `√(r_prev · r_s)`, or `r_prev` unchanged below the staking rate.
pub fn step_return(r_prev: Rate, staking_rate: Rate) -> Result<StepReturn> {
    if staking_rate.value() <= 0.0 {
        return Err(Error::domain("staking rate must be > 0"));
    }
    if r_prev < staking_rate {
        return Ok(StepReturn {
            rate: r_prev,
            allocated: false,
        });
    }
    Ok(StepReturn {
        rate: Rate::new((r_prev.value() * staking_rate.value()).sqrt())?,
        allocated: true,
    })
}

/// `r0^(1/2^j) · r_s^(1 − 1/2^j)`, evaluated in log space.
pub fn analytic_return_after(j: u32, r0: Rate, staking_rate: Rate) -> Result<Rate> {
    if j == 0 {
        return Ok(r0);
    }
    if r0.value() <= 0.0 || staking_rate.value() <= 0.0 {
        return Err(Error::domain("rates must be > 0"));
    }
    let weight = 0.5f64.powi(j.min(2_000) as i32);
    let log = weight * r0.value().ln() + (1.0 - weight) * staking_rate.value().ln();
    Rate::new(log.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStep {
    pub lp_index: u32,
    /// Pool return `r(0)` seen by this LP before depositing.
    pub pre_return: Rate,
    pub allocation: Money,
    pub staking: Money,
    pub post_tvl: Money,
    /// The closed form asked for more than the LP's wealth; she went all-in.
    pub clipped: bool,
    /// Amount the closed form wanted beyond the LP's wealth.
    pub uninvested: Money,
    /// The pool was at or below the staking rate; nothing was deposited.
    pub below_staking: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSeries {
    pub initial_return: Rate,
    pub staking_rate: Rate,
    pub wealth_per_lp: Money,
    pub steps: Vec<ConvergenceStep>,
}

impl ConvergenceSeries {
    pub fn any_clipped(&self) -> bool {
        self.steps.iter().any(|s| s.clipped)
    }

    /// Writes `lp_index,pre_return,allocation_usd,staking_usd,post_tvl_usd`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "lp_index",
            "pre_return",
            "allocation_usd",
            "staking_usd",
            "post_tvl_usd",
        ])?;
        for s in &self.steps {
            wtr.write_record([
                s.lp_index.to_string(),
                s.pre_return.value().to_string(),
                s.allocation.value().to_string(),
                s.staking.value().to_string(),
                s.post_tvl.value().to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Lets `num_lps` LPs, each holding `wealth_per_lp`, allocate one after
/// another. Volume is held fixed and deposits are never withdrawn.
pub fn simulate_sequential(
    pool: &PoolState,
    staking_rate: Rate,
    wealth_per_lp: Money,
    num_lps: u32,
) -> Result<ConvergenceSeries> {
    pool.validate()?;
    if num_lps == 0 {
        return Err(Error::domain("num_lps must be >= 1"));
    }
    if staking_rate.value() <= 0.0 {
        return Err(Error::domain("staking rate must be > 0"));
    }
    if pool.tvl.value() <= 0.0 {
        return Err(Error::domain("pool TVL must be > 0"));
    }

    let fees = pool.annual_fees();
    let wealth = wealth_per_lp.value();
    let mut tvl = pool.tvl.value();
    let mut steps = Vec::with_capacity(num_lps as usize);

    for lp_index in 1..=num_lps {
        let pre_return = Rate::new(fees / tvl)?;
        let wanted = allocation_for_pool(Money::clamp(tvl), pre_return, staking_rate)?.value();
        let clipped = wanted > wealth;
        let allocation = wanted.min(wealth);
        tvl += allocation;
        steps.push(ConvergenceStep {
            lp_index,
            pre_return,
            allocation: Money::clamp(allocation),
            staking: Money::clamp(wealth - allocation),
            post_tvl: Money::clamp(tvl),
            clipped,
            uninvested: Money::clamp(wanted - allocation),
            below_staking: pre_return <= staking_rate,
        });
    }

    Ok(ConvergenceSeries {
        initial_return: pool.initial_return(),
        staking_rate,
        wealth_per_lp,
        steps,
    })
}
