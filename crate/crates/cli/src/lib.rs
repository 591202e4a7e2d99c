//! Command-line front end for `lp-alloc`.
//!
//! Every subcommand renders its whole output into memory and writes it once,
//! so a failed run never leaves a partial report behind.

pub mod report;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lp_alloc::allocator::{AllocOptions, StrategyParams, StrategyRegistry};
use lp_alloc::convergence::simulate_sequential;
use lp_alloc::ingest::{
    build_snapshots, parse_swaps, read_snapshots, write_snapshots, MethodologyParams, PoolSnapshot,
};
use lp_alloc::model::{read_pools, LpConfig, Money, PoolState, Rate, DEFAULT_ANNUALIZATION_DAYS};
use lp_alloc::slippage::{cpmm_price_impact, equilibrium_slippage, SlippageInput};

use report::{AllocationReport, Meta};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(
    name = "lp-alloc",
    version,
    about = "Optimal LP capital allocation across staking and AMM pools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Allocate wealth between staking and the pools of a pools file.
    Allocate(AllocateArgs),
    /// Simulate LPs entering one pool in sequence.
    Simulate(SimulateArgs),
    /// Turn a swaps export into per-pool daily snapshots.
    Ingest(IngestArgs),
    /// Allocate across the snapshots of one day.
    Report(ReportArgs),
    /// Equilibrium price impact of a trade.
    Slippage(SlippageArgs),
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// Per-year staking rate as a fraction (0.0347 = 3.47%).
    #[arg(long)]
    pub staking_rate: f64,
    /// Capital the LP allocates, in USD.
    #[arg(long)]
    pub wealth: f64,
    /// Allocation strategy by registered name.
    #[arg(long, default_value = "closed-form")]
    pub solver: String,
    /// Grid steps per coordinate for the oracle solver.
    #[arg(long, default_value_t = 200)]
    pub grid_steps: usize,
    /// Scale allocations by each pool's tick span m.
    #[arg(long)]
    pub scale_by_ticks: bool,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Pools CSV: chain,pool_id,fee_bps,tvl_usd,daily_volume_usd[,return_pct].
    #[arg(long)]
    pub pools: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Days per year used to annualize daily volume.
    #[arg(long, default_value_t = DEFAULT_ANNUALIZATION_DAYS)]
    pub annualization_days: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Fee per unit of volume as a fraction.
    #[arg(long)]
    pub fee: f64,
    /// Volume per day (per year when --annualization-days 1).
    #[arg(long)]
    pub volume: f64,
    /// Pool TVL before the first LP enters, in USD.
    #[arg(long)]
    pub tvl: f64,
    /// Per-year staking rate as a fraction.
    #[arg(long)]
    pub staking_rate: f64,
    /// Wealth of each LP.
    #[arg(long)]
    pub wealth: f64,
    /// Number of LPs entering in sequence.
    #[arg(long, default_value_t = 8)]
    pub lps: u32,
    /// Days per year used to annualize daily volume.
    #[arg(long, default_value_t = DEFAULT_ANNUALIZATION_DAYS)]
    pub annualization_days: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Clone)]
pub struct MethodologyArgs {
    /// Half-width of the LP's band around spot, in percent.
    #[arg(long, default_value_t = 12.0)]
    pub range_pct: f64,
    /// Liquidity concentration factor of L2 pools relative to Ethereum.
    #[arg(long, default_value_t = 1.75)]
    pub concentration: f64,
    /// Override the fee-tier tick spacing for every pool.
    #[arg(long)]
    pub tick_spacing: Option<u32>,
    /// Days per year used to annualize daily volume.
    #[arg(long, default_value_t = DEFAULT_ANNUALIZATION_DAYS)]
    pub annualization_days: u32,
    /// Fail on the first rejected swap row instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

impl MethodologyArgs {
    pub fn params(&self) -> Result<MethodologyParams> {
        if !(0.0..100.0).contains(&self.range_pct) {
            bail!("--range-pct must lie in [0, 100), got {}", self.range_pct);
        }
        Ok(MethodologyParams {
            tick_spacing: self.tick_spacing,
            range_fraction: self.range_pct / 100.0,
            l2_concentration: self.concentration,
            annualization_days: self.annualization_days,
            ..MethodologyParams::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Swaps CSV export.
    #[arg(long)]
    pub swaps: PathBuf,
    #[command(flatten)]
    pub methodology: MethodologyArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Snapshot CSV produced by `ingest`.
    #[arg(long, conflicts_with = "swaps", required_unless_present = "swaps")]
    pub snapshots: Option<PathBuf>,
    /// Swaps export, ingested on the fly.
    #[arg(long)]
    pub swaps: Option<PathBuf>,
    /// Day to report (YYYY-MM-DD); optional when the input holds one day.
    #[arg(long)]
    pub date: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub methodology: MethodologyArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SlippageArgs {
    /// Per-year staking rate as a fraction.
    #[arg(long)]
    pub staking_rate: f64,
    /// Fee per unit of volume as a fraction.
    #[arg(long)]
    pub fee: f64,
    /// Volume per day (per year when --annualization-days 1).
    #[arg(long)]
    pub volume: f64,
    /// Trade size in units of the input token.
    #[arg(long)]
    pub trade_size: f64,
    /// Actual one-side reserve, to compare with the equilibrium impact.
    #[arg(long)]
    pub reserve: Option<f64>,
    /// Days per year used to annualize daily volume.
    #[arg(long, default_value_t = DEFAULT_ANNUALIZATION_DAYS)]
    pub annualization_days: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Runs a parsed command. Rendered output goes to `--out` or `stdout`;
/// diagnostics go to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let (text, output) = match &cli.command {
        Command::Allocate(args) => (run_allocate(args)?, &args.output),
        Command::Simulate(args) => (run_simulate(args, stderr)?, &args.output),
        Command::Ingest(args) => (run_ingest(args, stderr)?, &args.output),
        Command::Report(args) => (run_report(args, stderr)?, &args.output),
        Command::Slippage(args) => (run_slippage(args)?, &args.output),
    };
    emit(&text, output.out.as_deref(), stdout)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn staking_rate(value: f64) -> Result<Rate> {
    if !(value > 0.0 && value < 1.0) {
        bail!("--staking-rate is a fraction in (0, 1), e.g. 0.0347 for 3.47%; got {value}");
    }
    Ok(Rate::new(value)?)
}

fn allocate_report(
    command: &str,
    pools: &[PoolState],
    solver: &SolverArgs,
    date: Option<String>,
) -> Result<AllocationReport> {
    let cfg = LpConfig {
        wealth: Money::new(solver.wealth).context("--wealth")?,
        staking_rate: staking_rate(solver.staking_rate)?,
    };
    let options = AllocOptions {
        scale_by_ticks: solver.scale_by_ticks,
    };
    let strategy = StrategyRegistry::default().build(
        &solver.solver,
        &StrategyParams {
            options,
            grid_steps: solver.grid_steps,
        },
    )?;
    let result = strategy.allocate(pools, &cfg)?;
    let meta = Meta {
        command: command.to_string(),
        version: VERSION.to_string(),
        solver: strategy.name().to_string(),
        staking_rate: cfg.staking_rate.value(),
        wealth: cfg.wealth.value(),
        scale_by_ticks: solver.scale_by_ticks,
        date,
    };
    Ok(AllocationReport::new(meta, pools, &cfg, &result))
}

pub fn run_allocate(args: &AllocateArgs) -> Result<String> {
    let pools: Vec<PoolState> = read_pools(open(&args.pools)?)
        .with_context(|| format!("reading pools file {}", args.pools.display()))?
        .into_iter()
        .map(|p| p.with_annualization_days(args.annualization_days))
        .collect();
    allocate_report("allocate", &pools, &args.solver, None)?.render(args.output.format)
}

#[derive(Serialize)]
struct Document<M: Serialize, R: Serialize> {
    meta: M,
    rows: R,
}

pub fn run_simulate(args: &SimulateArgs, stderr: &mut dyn Write) -> Result<String> {
    let pool = PoolState::new("sim", "pool", args.fee, args.volume, args.tvl)?
        .with_annualization_days(args.annualization_days);
    let rs = staking_rate(args.staking_rate)?;
    let series = simulate_sequential(&pool, rs, Money::new(args.wealth).context("--wealth")?, args.lps)?;

    for step in &series.steps {
        if step.clipped {
            writeln!(
                stderr,
                "note: LP {} wanted {:.2} more than its wealth; allocated everything",
                step.lp_index,
                step.uninvested.value()
            )?;
        }
    }
    if series.steps.iter().all(|s| s.below_staking) {
        writeln!(
            stderr,
            "note: pool return is not above the staking rate; every LP stakes"
        )?;
    }

    match args.output.format {
        Format::Csv | Format::Table => {
            let mut buf = Vec::new();
            series.write_csv(&mut buf)?;
            Ok(String::from_utf8(buf)?)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct SimMeta<'a> {
                command: &'a str,
                version: &'a str,
                fee: f64,
                daily_volume: f64,
                tvl: f64,
                staking_rate: f64,
                wealth_per_lp: f64,
                annualization_days: u32,
            }
            let doc = Document {
                meta: SimMeta {
                    command: "simulate",
                    version: VERSION,
                    fee: args.fee,
                    daily_volume: args.volume,
                    tvl: args.tvl,
                    staking_rate: rs.value(),
                    wealth_per_lp: args.wealth,
                    annualization_days: args.annualization_days,
                },
                rows: &series.steps,
            };
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}

fn ingest_swaps(path: &Path, methodology: &MethodologyArgs, stderr: &mut dyn Write) -> Result<Vec<PoolSnapshot>> {
    let params = methodology.params()?;
    let parsed = parse_swaps(open(path)?, params.tick_spacing)
        .with_context(|| format!("reading swaps file {}", path.display()))?;
    if parsed.duplicates > 0 {
        writeln!(stderr, "warning: dropped {} duplicate swap rows", parsed.duplicates)?;
    }
    for rejected in &parsed.rejected {
        writeln!(stderr, "rejected {}: {rejected}", path.display())?;
    }
    let events = if methodology.strict {
        parsed.into_strict()?
    } else {
        parsed.events
    };
    Ok(build_snapshots(&events, &params)?)
}

pub fn run_ingest(args: &IngestArgs, stderr: &mut dyn Write) -> Result<String> {
    let snapshots = ingest_swaps(&args.swaps, &args.methodology, stderr)?;
    match args.output.format {
        Format::Csv | Format::Table => {
            let mut buf = Vec::new();
            write_snapshots(&mut buf, &snapshots)?;
            Ok(String::from_utf8(buf)?)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct IngestMeta<'a> {
                command: &'a str,
                version: &'a str,
                range_fraction: f64,
                l2_concentration: f64,
                tick_spacing: Option<u32>,
                annualization_days: u32,
            }
            let params = args.methodology.params()?;
            let doc = Document {
                meta: IngestMeta {
                    command: "ingest",
                    version: VERSION,
                    range_fraction: params.range_fraction,
                    l2_concentration: params.l2_concentration,
                    tick_spacing: params.tick_spacing,
                    annualization_days: params.annualization_days,
                },
                rows: &snapshots,
            };
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}

pub fn run_report(args: &ReportArgs, stderr: &mut dyn Write) -> Result<String> {
    let snapshots = match (&args.snapshots, &args.swaps) {
        (Some(path), _) => {
            read_snapshots(open(path)?).with_context(|| format!("reading snapshots {}", path.display()))?
        }
        (None, Some(path)) => ingest_swaps(path, &args.methodology, stderr)?,
        (None, None) => bail!("one of --snapshots or --swaps is required"),
    };

    let mut dates: Vec<String> = snapshots
        .iter()
        .map(|s| s.date.format("%Y-%m-%d").to_string())
        .collect();
    dates.sort();
    dates.dedup();
    let date = match &args.date {
        Some(d) if dates.contains(d) => d.clone(),
        Some(d) => bail!(
            "date {d} not found in snapshots; available dates: {}",
            list_or_none(&dates)
        ),
        None if dates.len() == 1 => dates[0].clone(),
        None => bail!("--date is required; available dates: {}", list_or_none(&dates)),
    };

    let mut pools = Vec::new();
    for snap in snapshots
        .iter()
        .filter(|s| s.date.format("%Y-%m-%d").to_string() == date)
    {
        if !snap.usable() {
            writeln!(
                stderr,
                "note: {}/{} has no TVL in the current tick on {date}; skipped",
                snap.chain, snap.pool_id
            )?;
            continue;
        }
        pools.push(snap.to_pool_state(args.methodology.annualization_days)?);
    }
    allocate_report("report", &pools, &args.solver, Some(date))?.render(args.output.format)
}

fn list_or_none(dates: &[String]) -> String {
    if dates.is_empty() {
        "none".to_string()
    } else {
        dates.join(", ")
    }
}

pub fn run_slippage(args: &SlippageArgs) -> Result<String> {
    let input = SlippageInput {
        reserve_x: Money::new(args.reserve.unwrap_or(0.0)).context("--reserve")?,
        trade_size: Money::new(args.trade_size).context("--trade-size")?,
        fee: args.fee,
        daily_volume: Money::new(args.volume).context("--volume")?,
        staking_rate: staking_rate(args.staking_rate)?,
        annualization_days: args.annualization_days,
    };
    if args.annualization_days == 0 {
        bail!("--annualization-days must be >= 1");
    }
    let rho = equilibrium_slippage(&input)?;
    let reserve = input.equilibrium_reserve()?;
    let direct = args
        .reserve
        .map(|_| cpmm_price_impact(input.reserve_x, input.trade_size))
        .transpose()?;

    #[derive(Serialize)]
    struct Row {
        trade_size_usd: f64,
        equilibrium_reserve_usd: f64,
        equilibrium_slippage: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        direct_price_impact: Option<f64>,
    }
    let row = Row {
        trade_size_usd: args.trade_size,
        equilibrium_reserve_usd: reserve.value(),
        equilibrium_slippage: rho,
        direct_price_impact: direct,
    };

    match args.output.format {
        Format::Csv | Format::Table => {
            let mut out = String::from("trade_size_usd,equilibrium_reserve_usd,equilibrium_slippage");
            if direct.is_some() {
                out.push_str(",direct_price_impact");
            }
            out.push('\n');
            out.push_str(&format!(
                "{},{},{}",
                row.trade_size_usd, row.equilibrium_reserve_usd, row.equilibrium_slippage
            ));
            if let Some(d) = direct {
                out.push_str(&format!(",{d}"));
            }
            out.push('\n');
            Ok(out)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct SlipMeta<'a> {
                command: &'a str,
                version: &'a str,
                staking_rate: f64,
                fee: f64,
                daily_volume: f64,
                annualization_days: u32,
            }
            let doc = Document {
                meta: SlipMeta {
                    command: "slippage",
                    version: VERSION,
                    staking_rate: args.staking_rate,
                    fee: args.fee,
                    daily_volume: args.volume,
                    annualization_days: args.annualization_days,
                },
                rows: [row],
            };
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}
