//! Swap-export ingestion: parse, keep each pool's last swap per UTC day,
//! value the liquidity in the current tick and derive an annualized return.

mod snapshot;
mod swaps;
pub mod tick;

pub use snapshot::{
    build_snapshots, pool_snapshot, read_snapshots, swap_volume_usd, write_snapshots, MethodologyParams, PoolSnapshot,
    SNAPSHOT_COLUMNS,
};
pub use swaps::{
    daily_last_swaps, default_tick_spacing, parse_swaps, PoolDay, RowError, SwapEvent, SwapParse, SWAP_COLUMNS,
};
pub use tick::{sqrt_price_at_tick, tick_tvl, ticks_in_range};
