use std::collections::BTreeMap;

use super::{optimal_allocation_with, oracle_maximize, AllocOptions, AllocationResult};
use crate::error::{Error, Result};
use crate::model::{LpConfig, PoolState};

/// A solver for the staking-vs-pools allocation problem.
pub trait AllocationStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn allocate(&self, pools: &[PoolState], cfg: &LpConfig) -> Result<AllocationResult>;
}

/// Knobs handed to a strategy factory when it is looked up by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyParams {
    pub options: AllocOptions,
    pub grid_steps: usize,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            options: AllocOptions::default(),
            grid_steps: 200,
        }
    }
}

/// Closed-form optimum with water-filling when the budget binds.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm {
    pub options: AllocOptions,
}

impl AllocationStrategy for ClosedForm {
    fn name(&self) -> &'static str {
        "closed-form"
    }

    fn allocate(&self, pools: &[PoolState], cfg: &LpConfig) -> Result<AllocationResult> {
        optimal_allocation_with(pools, cfg, self.options)
    }
}

/// Exhaustive grid plus pairwise golden-section refinement.
#[derive(Debug, Clone, Copy)]
pub struct GridOracle {
    pub options: AllocOptions,
    pub grid_steps: usize,
}

impl AllocationStrategy for GridOracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn allocate(&self, pools: &[PoolState], cfg: &LpConfig) -> Result<AllocationResult> {
        oracle_maximize(pools, cfg, self.grid_steps, self.options)
    }
}

type Factory = fn(&StrategyParams) -> Box<dyn AllocationStrategy>;

/// Name-keyed table of strategy factories.
pub struct StrategyRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, name: &str, params: &StrategyParams) -> Result<Box<dyn AllocationStrategy>> {
        self.factories
            .get(name)
            .map(|factory| factory(params))
            .ok_or_else(|| Error::UnknownStrategy {
                name: name.to_string(),
                available: self.names().collect::<Vec<_>>().join(", "),
            })
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut registry = StrategyRegistry::empty();
        registry.register("closed-form", |p| Box::new(ClosedForm { options: p.options }));
        registry.register("oracle", |p| {
            Box::new(GridOracle {
                options: p.options,
                grid_steps: p.grid_steps,
            })
        });
        registry
    }
}
