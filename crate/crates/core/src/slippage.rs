//! CPMM price impact and its equilibrium form.
//!
//! When a pool's return has converged to the staking rate its TVL satisfies
//! `TVL = f·Vol / r_s`, and a CPMM holds half of that on each side, so the
//! impact `Δx/x` of a trade becomes `2·r_s·Δx / (f·Vol)`. `f·Vol` must be
//! annualized to match the per-year staking rate.

use crate::error::{Error, Result};
use crate::model::{Money, Rate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlippageInput {
    /// USD value of one side of the pool. Only needed for direct impact.
    pub reserve_x: Money,
    pub trade_size: Money,
    pub fee: f64,
    pub daily_volume: Money,
    pub staking_rate: Rate,
    pub annualization_days: u32,
}

impl SlippageInput {
    pub fn annual_fee_volume(&self) -> f64 {
        self.fee * self.daily_volume.value() * f64::from(self.annualization_days)
    }

    /// One-side reserve at equilibrium: `(f·Vol / r_s) / 2`.
    pub fn equilibrium_reserve(&self) -> Result<Money> {
        if self.staking_rate.value() <= 0.0 {
            return Err(Error::domain("staking rate must be > 0"));
        }
        Money::new(self.annual_fee_volume() / self.staking_rate.value() / 2.0)
    }
}

/// `Δx / x`.
pub fn cpmm_price_impact(reserve_x: Money, trade_size: Money) -> Result<f64> {
    if reserve_x.value() <= 0.0 {
        return Err(Error::domain("reserve must be > 0"));
    }
    Ok(trade_size.value() / reserve_x.value())
}

/// `ρ = 2·r_s·Δx / (f·Vol)` with `f·Vol` annualized.
pub fn equilibrium_slippage(input: &SlippageInput) -> Result<f64> {
    let fee_volume = input.annual_fee_volume();
    if !(fee_volume.is_finite() && fee_volume > 0.0) {
        return Err(Error::domain("annual fee volume f·Vol must be > 0"));
    }
    Ok(2.0 * input.staking_rate.value() * input.trade_size.value() / fee_volume)
}
