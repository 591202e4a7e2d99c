use super::{build_result, AllocOptions, AllocationResult};
use crate::error::{Error, Result};
use crate::model::{LpConfig, PoolState};

/// Pools beyond which the exhaustive grid is skipped.
const MAX_GRID_POOLS: usize = 4;
/// Upper bound on grid points evaluated.
const MAX_GRID_POINTS: u128 = 50_000_000;
const MAX_SWEEPS: usize = 2_000;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Brute-force maximizer of the LP's earnings over the budget simplex.
///
/// With at most four pools it first evaluates every grid point with step
/// `W / grid_steps`, then refines the best point by golden-section ascent
/// along every pairwise transfer direction (staking included) until a sweep
/// no longer improves the objective. Larger instances skip the grid and start
/// the ascent from all-staking.
pub fn oracle_maximize(
    pools: &[PoolState],
    cfg: &LpConfig,
    grid_steps: usize,
    opts: AllocOptions,
) -> Result<AllocationResult> {
    if grid_steps == 0 {
        return Err(Error::domain("grid_steps must be >= 1"));
    }
    for pool in pools {
        pool.validate()?;
        if pool.tvl.value() <= 0.0 {
            return Err(Error::domain(format!("pool {}: TVL must be > 0", pool.pool_id)));
        }
    }
    let objective = Objective::new(pools, cfg, opts);
    let wealth = cfg.wealth.value();

    let mut x = if pools.len() <= MAX_GRID_POOLS {
        let points = grid_point_count(grid_steps as u128, pools.len());
        if points > MAX_GRID_POINTS {
            return Err(Error::ResourceLimit(format!(
                "{points} grid points for {} pools at {grid_steps} steps (limit {MAX_GRID_POINTS})",
                pools.len()
            )));
        }
        grid_search(&objective, wealth, grid_steps)
    } else {
        let mut x = vec![0.0; pools.len() + 1];
        x[0] = wealth;
        x
    };

    refine(&objective, &mut x);

    let staking = x[0];
    let lambda = objective.multiplier(&x);
    Ok(build_result(
        pools,
        &x[1..],
        staking,
        lambda,
        cfg.staking_rate,
        staking <= 0.0,
        opts,
    ))
}

/// Number of (k_1..k_n) with k_i ≥ 0 and Σ k_i ≤ steps: C(steps + n, n).
fn grid_point_count(steps: u128, n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, i| acc.saturating_mul(steps + i) / i)
}

struct Objective {
    staking_rate: f64,
    fees: Vec<f64>,
    tvl: Vec<f64>,
    span: Vec<f64>,
}

impl Objective {
    fn new(pools: &[PoolState], cfg: &LpConfig, opts: AllocOptions) -> Self {
        Objective {
            staking_rate: cfg.staking_rate.value(),
            fees: pools.iter().map(PoolState::annual_fees).collect(),
            tvl: pools.iter().map(|p| p.tvl.value()).collect(),
            span: pools.iter().map(|p| f64::from(opts.span(p))).collect(),
        }
    }

    // Coordinate 0 is staking, coordinate i ≥ 1 is pool i − 1.
    fn term(&self, i: usize, w: f64) -> f64 {
        if i == 0 {
            self.staking_rate * w
        } else if w <= 0.0 {
            0.0
        } else {
            let k = i - 1;
            self.fees[k] * w / (self.tvl[k] + w / self.span[k])
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, &w)| self.term(i, w)).sum()
    }

    // Finite-difference-free estimate of λ: r_s if staking is funded,
    // otherwise the mean marginal of the funded pools.
    fn multiplier(&self, x: &[f64]) -> f64 {
        if x[0] > 0.0 {
            return self.staking_rate;
        }
        let marginals: Vec<f64> = x[1..]
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(k, &w)| {
                let d = self.tvl[k] + w / self.span[k];
                self.fees[k] * self.tvl[k] / (d * d)
            })
            .collect();
        if marginals.is_empty() {
            self.staking_rate
        } else {
            (marginals.iter().sum::<f64>() / marginals.len() as f64).max(self.staking_rate)
        }
    }
}

fn grid_search(objective: &Objective, wealth: f64, steps: usize) -> Vec<f64> {
    let n = objective.fees.len();
    let step = wealth / steps as f64;
    let mut counts = vec![0usize; n];
    let mut best = (f64::MIN, vec![0.0; n + 1]);

    // Odometer over all count vectors with Σ counts ≤ steps.
    loop {
        let used: usize = counts.iter().sum();
        let mut x = Vec::with_capacity(n + 1);
        x.push(wealth - step * used as f64);
        x.extend(counts.iter().map(|&c| step * c as f64));
        let v = objective.value(&x);
        if v > best.0 {
            best = (v, x);
        }

        let mut pos = 0;
        loop {
            if pos == n {
                return best.1;
            }
            counts[pos] += 1;
            if counts.iter().sum::<usize>() <= steps {
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
    }
}

fn refine(objective: &Objective, x: &mut [f64]) {
    let dims = x.len();
    let scale = x.iter().sum::<f64>().max(1.0);
    for _ in 0..MAX_SWEEPS {
        let before = objective.value(x);
        for i in 0..dims {
            for j in (i + 1)..dims {
                transfer(objective, x, i, j, scale);
            }
        }
        let after = objective.value(x);
        if after - before <= 1e-15 * after.abs().max(1e-300) {
            break;
        }
    }
}

// Golden-section search over t ∈ [−x_i, x_j] for the move x_i += t, x_j −= t.
fn transfer(objective: &Objective, x: &mut [f64], i: usize, j: usize, scale: f64) {
    let (xi, xj) = (x[i], x[j]);
    if xi + xj <= 0.0 {
        return;
    }
    let phi = |t: f64| objective.term(i, xi + t) + objective.term(j, xj - t);
    let (mut a, mut b) = (-xi, xj);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    while b - a > 1e-14 * scale {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = phi(d);
        }
    }
    // Candidates include the corners, which golden section never evaluates.
    let (t, _) = [-xi, xj, 0.5 * (a + b)]
        .into_iter()
        .map(|t| (t, phi(t)))
        .fold((0.0, phi(0.0)), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if t == -xi {
        x[i] = 0.0;
        x[j] = xi + xj;
    } else if t == xj {
        x[i] = xi + xj;
        x[j] = 0.0;
    } else {
        x[i] = (xi + t).max(0.0);
        x[j] = (xj - t).max(0.0);
    }
}
