use std::path::PathBuf;
use std::process::{Command, Output};

use lp_alloc_cli::report::AllocationReport;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn lp_alloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lp-alloc"))
        .args(args)
        .output()
        .expect("failed to spawn binary")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_temp(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lp-alloc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn allocate_empty_pools_file_stakes_everything() {
    let pools = write_temp("empty.csv", "chain,pool_id,fee_bps,tvl_usd,daily_volume_usd\n");
    let out = stdout(&lp_alloc(&[
        "allocate",
        "--pools",
        pools.to_str().unwrap(),
        "--staking-rate",
        "0.03",
        "--wealth",
        "1000",
        "--format",
        "json",
    ]));
    let report: AllocationReport = serde_json::from_str(&out).unwrap();
    assert!(report.rows.is_empty());
    assert_eq!(report.summary.staking_usd, 1000.0);
    assert!((report.summary.total_earnings_usd - 30.0).abs() < 1e-12);
}

#[test]
fn allocate_computes_returns_without_return_column() {
    let pools = write_temp(
        "computed.csv",
        "chain,pool_id,fee_bps,tvl_usd,daily_volume_usd\nArbitrum,arb,5,87534.74,145128466.78\n",
    );
    let out = stdout(&lp_alloc(&[
        "allocate",
        "--pools",
        pools.to_str().unwrap(),
        "--staking-rate",
        "0.0347",
        "--wealth",
        "1e9",
    ]));
    let rows = csv_rows(&out);
    let r0: f64 = rows[0][4].parse().unwrap();
    let expected = 0.0005 * 145_128_466.78 * 365.0 / 87_534.74;
    assert!((r0 - expected).abs() / expected < 1e-15);
    let alloc: f64 = rows[0][5].parse().unwrap();
    assert!((alloc - 87_534.74 * ((expected / 0.0347).sqrt() - 1.0)).abs() < 1e-6);
}

#[test]
fn allocate_rejects_bad_input() {
    let missing = lp_alloc(&[
        "allocate",
        "--pools",
        "/nonexistent.csv",
        "--staking-rate",
        "0.03",
        "--wealth",
        "1",
    ]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent.csv"));

    let bad = write_temp(
        "bad.csv",
        "chain,pool_id,fee_bps,tvl_usd,daily_volume_usd\nEth,e,5,-3,1\n",
    );
    let out = lp_alloc(&[
        "allocate",
        "--pools",
        bad.to_str().unwrap(),
        "--staking-rate",
        "0.03",
        "--wealth",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let pct = lp_alloc(&[
        "allocate",
        "--pools",
        fixture("table1_pools.csv").to_str().unwrap(),
        "--staking-rate",
        "3.47",
        "--wealth",
        "1",
    ]);
    assert!(!pct.status.success());
}

#[test]
fn allocate_all_staking_when_nothing_beats_staking() {
    let out = stdout(&lp_alloc(&[
        "allocate",
        "--pools",
        fixture("table1_pools.csv").to_str().unwrap(),
        "--staking-rate",
        "0.5",
        "--wealth",
        "100",
    ]));
    let rows = csv_rows(&out);
    assert!(rows[..6].iter().all(|r| r[5] == "0"));
    assert_eq!(rows[6][0], "staking");
    assert_eq!(rows[6][5], "100");
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let pools = fixture("table1_pools.csv");
    let base = [
        "allocate",
        "--pools",
        pools.to_str().unwrap(),
        "--staking-rate",
        "0.0347",
        "--wealth",
        "150000",
    ];
    let csv = stdout(&lp_alloc(&[&base[..], &["--format", "csv"]].concat()));
    let json = stdout(&lp_alloc(&[&base[..], &["--format", "json"]].concat()));
    let report: AllocationReport = serde_json::from_str(&json).unwrap();
    assert!(report.summary.budget_binding);

    let rows = csv_rows(&csv);
    for (row, pool) in rows.iter().zip(&report.rows) {
        assert_eq!(row[1], pool.pool_id);
        assert_eq!(row[4].parse::<f64>().unwrap(), pool.initial_return);
        assert_eq!(row[5].parse::<f64>().unwrap(), pool.allocation_usd);
        assert_eq!(row[6].parse::<f64>().unwrap(), pool.post_return);
    }
    let n = report.rows.len();
    assert_eq!(rows[n][5].parse::<f64>().unwrap(), report.summary.staking_usd);
    assert_eq!(rows[n + 1][4].parse::<f64>().unwrap(), report.summary.lambda);
    assert_eq!(
        rows[n + 2][5].parse::<f64>().unwrap(),
        report.summary.total_earnings_usd
    );
}

#[test]
fn oracle_solver_is_selectable() {
    let pools = fixture("table1_pools.csv");
    let base = [
        "allocate",
        "--pools",
        pools.to_str().unwrap(),
        "--staking-rate",
        "0.0347",
        "--wealth",
        "150000",
        "--format",
        "json",
    ];
    // Six pools: the oracle skips the grid and runs pairwise ascent only.
    let oracle: AllocationReport =
        serde_json::from_str(&stdout(&lp_alloc(&[&base[..], &["--solver", "oracle"]].concat()))).unwrap();
    let closed: AllocationReport = serde_json::from_str(&stdout(&lp_alloc(&base))).unwrap();
    assert_eq!(oracle.meta.solver, "oracle");
    let rel = (oracle.summary.total_earnings_usd - closed.summary.total_earnings_usd).abs()
        / closed.summary.total_earnings_usd;
    assert!(rel < 1e-9);

    let unknown = lp_alloc(&[&base[..], &["--solver", "newton"]].concat());
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("closed-form, oracle"));
}

#[test]
fn every_subcommand_is_deterministic() {
    let swaps = fixture("swaps.csv");
    let snaps = fixture("table1_snapshots.csv");
    let pools = fixture("table1_pools.csv");
    let runs: [Vec<&str>; 5] = [
        vec![
            "allocate",
            "--pools",
            pools.to_str().unwrap(),
            "--staking-rate",
            "0.0347",
            "--wealth",
            "1e6",
            "--format",
            "json",
        ],
        vec![
            "simulate",
            "--fee",
            "1",
            "--volume",
            "400000",
            "--tvl",
            "4000000",
            "--staking-rate",
            "0.0342",
            "--wealth",
            "1e7",
            "--annualization-days",
            "1",
        ],
        vec!["ingest", "--swaps", swaps.to_str().unwrap()],
        vec![
            "report",
            "--snapshots",
            snaps.to_str().unwrap(),
            "--staking-rate",
            "0.0347",
            "--wealth",
            "1e6",
            "--format",
            "table",
        ],
        vec![
            "slippage",
            "--staking-rate",
            "0.0342",
            "--fee",
            "1",
            "--volume",
            "400000",
            "--trade-size",
            "10000",
            "--annualization-days",
            "1",
        ],
    ];
    for args in &runs {
        let a = lp_alloc(args);
        let b = lp_alloc(args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn simulate_figure_parameters() {
    let out = stdout(&lp_alloc(&[
        "simulate",
        "--fee",
        "1",
        "--volume",
        "400000",
        "--tvl",
        "4000000",
        "--staking-rate",
        "0.0342",
        "--wealth",
        "1e7",
        "--lps",
        "8",
        "--annualization-days",
        "1",
    ]));
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("lp_index,pre_return,allocation_usd,staking_usd,post_tvl_usd")
    );
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 8);
    for (j, row) in rows.iter().enumerate() {
        let pre: f64 = row[1].parse().unwrap();
        let weight = 0.5f64.powi(j as i32);
        let analytic = 0.10f64.powf(weight) * 0.0342f64.powf(1.0 - weight);
        assert!((pre - analytic).abs() / analytic < 1e-10);
    }
    let first_alloc: f64 = rows[0][2].parse().unwrap();
    assert!((first_alloc - 2_839_856.0).abs() <= 1.0);
}

#[test]
fn simulate_single_lp_and_below_staking() {
    let one = stdout(&lp_alloc(&[
        "simulate",
        "--fee",
        "1",
        "--volume",
        "400000",
        "--tvl",
        "4000000",
        "--staking-rate",
        "0.0342",
        "--wealth",
        "1e7",
        "--lps",
        "1",
        "--annualization-days",
        "1",
    ]));
    assert_eq!(csv_rows(&one).len(), 1);

    let below = lp_alloc(&[
        "simulate",
        "--fee",
        "1",
        "--volume",
        "100",
        "--tvl",
        "4000000",
        "--staking-rate",
        "0.0342",
        "--wealth",
        "1e3",
        "--lps",
        "3",
        "--annualization-days",
        "1",
    ]);
    let text = stdout(&below);
    assert!(csv_rows(&text).iter().all(|r| r[2] == "0" && r[3] == "1000"));
    assert!(String::from_utf8_lossy(&below.stderr).contains("every LP stakes"));

    let invalid = lp_alloc(&[
        "simulate",
        "--fee",
        "2",
        "--volume",
        "1",
        "--tvl",
        "1",
        "--staking-rate",
        "0.03",
        "--wealth",
        "1",
    ]);
    assert!(!invalid.status.success());
}

#[test]
fn report_on_table1_snapshots() {
    let out = stdout(&lp_alloc(&[
        "report",
        "--snapshots",
        fixture("table1_snapshots.csv").to_str().unwrap(),
        "--date",
        "2024-04-30",
        "--staking-rate",
        "0.0347",
        "--wealth",
        "1e6",
        "--format",
        "json",
    ]));
    let report: AllocationReport = serde_json::from_str(&out).unwrap();
    let eth = report.rows.iter().find(|r| r.chain == "Ethereum").unwrap();
    assert_eq!(eth.allocation_usd, 0.0);
    let top = report
        .rows
        .iter()
        .max_by(|a, b| a.initial_return.total_cmp(&b.initial_return))
        .unwrap();
    assert_eq!(top.chain, "Optimism");
    assert_eq!(report.meta.date.as_deref(), Some("2024-04-30"));
}

#[test]
fn report_single_chain_and_all_below_staking() {
    let single = write_temp(
        "single.csv",
        "chain,pool_id,date,tick_tvl_usd,daily_volume_usd,annualized_return,m,concentration\n\
         Base,base,2024-04-30,68627.34,142939078.94,0.1716,131,1.75\n",
    );
    let out = stdout(&lp_alloc(&[
        "report",
        "--snapshots",
        single.to_str().unwrap(),
        "--staking-rate",
        "0.0347",
        "--wealth",
        "1e6",
    ]));
    // One pool row plus staking, lambda and total rows.
    assert_eq!(csv_rows(&out).len(), 4);

    let out = stdout(&lp_alloc(&[
        "report",
        "--snapshots",
        fixture("table1_snapshots.csv").to_str().unwrap(),
        "--staking-rate",
        "0.3",
        "--wealth",
        "1e6",
        "--format",
        "json",
    ]));
    let report: AllocationReport = serde_json::from_str(&out).unwrap();
    assert!(report.rows.iter().all(|r| r.allocation_usd == 0.0));
    assert_eq!(report.summary.staking_usd, 1e6);
}

#[test]
fn report_missing_date_lists_available_dates() {
    let out = lp_alloc(&[
        "report",
        "--snapshots",
        fixture("snapshots.golden.csv").to_str().unwrap(),
        "--date",
        "2023-01-01",
        "--staking-rate",
        "0.0347",
        "--wealth",
        "1e6",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("available dates: 2024-04-29, 2024-04-30"));

    let no_date = lp_alloc(&[
        "report",
        "--snapshots",
        fixture("snapshots.golden.csv").to_str().unwrap(),
        "--staking-rate",
        "0.0347",
        "--wealth",
        "1",
    ]);
    assert!(!no_date.status.success());
}

#[test]
fn report_straight_from_swaps() {
    let out = stdout(&lp_alloc(&[
        "report",
        "--swaps",
        fixture("swaps.csv").to_str().unwrap(),
        "--date",
        "2024-04-30",
        "--staking-rate",
        "0.0347",
        "--wealth",
        "1e6",
        "--format",
        "json",
    ]));
    let report: AllocationReport = serde_json::from_str(&out).unwrap();
    assert_eq!(report.rows.len(), 3);
}

#[test]
fn ingest_strict_mode_fails_on_rejected_row() {
    let out = lp_alloc(&["ingest", "--swaps", fixture("swaps.csv").to_str().unwrap(), "--strict"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 8"));
}

#[test]
fn ingest_writes_to_out_file() {
    let path = std::env::temp_dir().join(format!("lp-alloc-snap-{}.csv", std::process::id()));
    let out = lp_alloc(&[
        "ingest",
        "--swaps",
        fixture("swaps.csv").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(fixture("snapshots.golden.csv")).unwrap()
    );
    std::fs::remove_file(path).ok();
}

#[test]
fn slippage_reports_equilibrium_and_direct_impact() {
    let out = stdout(&lp_alloc(&[
        "slippage",
        "--staking-rate",
        "0.0342",
        "--fee",
        "1",
        "--volume",
        "400000",
        "--trade-size",
        "10000",
        "--annualization-days",
        "1",
        "--reserve",
        "5847953",
    ]));
    let rows = csv_rows(&out);
    let rho: f64 = rows[0][2].parse().unwrap();
    let direct: f64 = rows[0][3].parse().unwrap();
    assert!((rho - 0.00171).abs() < 1e-15);
    assert!((direct - 0.00171).abs() < 1e-7);

    let zero = lp_alloc(&[
        "slippage",
        "--staking-rate",
        "0.03",
        "--fee",
        "0",
        "--volume",
        "1",
        "--trade-size",
        "1",
    ]);
    assert!(!zero.status.success());
}
