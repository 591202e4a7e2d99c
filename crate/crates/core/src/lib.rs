//! Reward-maximizing allocation of liquidity-provider capital across ETH
//! staking and AMM pools on Ethereum and its rollups.
//!
//! The crate is split by concern:
//!
//! - [`model`]: rates, money, pool state and the CPMM / CLMM return functions.
//! - [`allocator`]: the closed-form optimum, its water-filling extension for a
//!   binding budget, KKT verification and a brute-force oracle, all reachable
//!   through a name-keyed [`allocator::StrategyRegistry`].
//! - [`convergence`]: sequential LP entry and the geometric convergence of
//!   pool returns to the staking rate.
//! - [`slippage`]: CPMM price impact and its equilibrium form.
//! - [`ingest`]: swap-export parsing, daily last-swap selection, tick math and
//!   per-pool-day snapshots.

pub mod allocator;
pub mod convergence;
pub mod error;
pub mod ingest;
pub mod model;
pub mod slippage;

pub use error::{Error, Result};
pub use model::{LpConfig, Money, PoolState, Rate};
