//! Concentrated-liquidity tick math in floating point.
//!
//! Tick `i` corresponds to price `1.0001^i`, so its square-root price is
//! `1.0001^(i/2)`. Within an initialized range `[p_a, p_b]` a position of
//! liquidity `L` at square-root price `s` holds
//! `amount0 = L(1/s − 1/√p_b)` and `amount1 = L(s − √p_a)`.

use crate::error::{Error, Result};
use crate::model::Money;

pub const MIN_TICK: i32 = -887_272;
pub const MAX_TICK: i32 = 887_272;

/// `ln(1.0001)`.
pub fn ln_tick_base() -> f64 {
    0.0001f64.ln_1p()
}

pub(crate) fn sqrt_price_unchecked(tick: i64) -> f64 {
    (tick as f64 * 0.5 * ln_tick_base()).exp()
}

/// `1.0001^(tick/2)`.
pub fn sqrt_price_at_tick(tick: i32) -> Result<f64> {
    if !(MIN_TICK..=MAX_TICK).contains(&tick) {
        return Err(Error::domain(format!("tick {tick} outside [{MIN_TICK}, {MAX_TICK}]")));
    }
    Ok(sqrt_price_unchecked(i64::from(tick)))
}

/// Fractional tick of a square-root price: `2·log_1.0001(s)`.
pub fn tick_at_sqrt_price(sqrt_price: f64) -> f64 {
    2.0 * sqrt_price.ln() / ln_tick_base()
}

/// Lower bound of the initialized range containing `tick`.
pub fn range_lower_tick(tick: i32, tick_spacing: u32) -> i64 {
    let s = i64::from(tick_spacing);
    i64::from(tick).div_euclid(s) * s
}

/// Token amounts held by liquidity `L` in the current range.
pub fn range_amounts(liquidity: f64, tick: i32, sqrt_price: f64, tick_spacing: u32) -> Result<(f64, f64)> {
    if tick_spacing == 0 {
        return Err(Error::domain("tick_spacing must be >= 1"));
    }
    if !(liquidity.is_finite() && liquidity >= 0.0) {
        return Err(Error::domain(format!(
            "liquidity must be finite and >= 0, got {liquidity}"
        )));
    }
    if !(sqrt_price.is_finite() && sqrt_price > 0.0) {
        return Err(Error::domain(format!("sqrt_price must be > 0, got {sqrt_price}")));
    }
    sqrt_price_at_tick(tick)?;
    let lower = range_lower_tick(tick, tick_spacing);
    let sp_lower = sqrt_price_unchecked(lower);
    let sp_upper = sqrt_price_unchecked(lower + i64::from(tick_spacing));

    // Allow a few ulps of slack at the range edges.
    let slack = 1e-12;
    if sqrt_price < sp_lower * (1.0 - slack) || sqrt_price > sp_upper * (1.0 + slack) {
        return Err(Error::domain(format!(
            "sqrt_price {sqrt_price} outside range [{sp_lower}, {sp_upper}] of tick {tick} (spacing {tick_spacing})"
        )));
    }
    let amount0 = (liquidity * (1.0 / sqrt_price - 1.0 / sp_upper)).max(0.0);
    let amount1 = (liquidity * (sqrt_price - sp_lower)).max(0.0);
    Ok((amount0, amount1))
}

/// USD value of the liquidity in the current range.
pub fn tick_tvl(
    liquidity: f64,
    tick: i32,
    sqrt_price: f64,
    tick_spacing: u32,
    usd_price_token0: Money,
    usd_price_token1: Money,
) -> Result<Money> {
    let (amount0, amount1) = range_amounts(liquidity, tick, sqrt_price, tick_spacing)?;
    Money::new(amount0 * usd_price_token0.value() + amount1 * usd_price_token1.value())
}

/// Initialized ranges covering `±range_fraction` around spot:
/// `2·ceil(ln(1 + range_fraction) / (ln(1.0001)·spacing)) + 1`.
pub fn ticks_in_range(range_fraction: f64, tick_spacing: u32) -> Result<u32> {
    if !(0.0..1.0).contains(&range_fraction) {
        return Err(Error::domain(format!(
            "range fraction must lie in [0, 1), got {range_fraction}"
        )));
    }
    if tick_spacing == 0 {
        return Err(Error::domain("tick_spacing must be >= 1"));
    }
    let per_side = (range_fraction.ln_1p() / (ln_tick_base() * f64::from(tick_spacing))).ceil();
    Ok(2 * per_side as u32 + 1)
}
