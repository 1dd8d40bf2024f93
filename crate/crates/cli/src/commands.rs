//! The four subcommands. Each `cmd_*` validates the config, computes in memory and writes
//! every artifact from this thread once the numbers are in.

use std::io::Write;
use std::path::PathBuf;

use internex_core::{
    run_monte_carlo, scenario_preset, solve, stationary_policy, sweep, BenchmarkConfig, ExecutionRegion,
    InternalExchange, NaiveBenchmark, ScenarioName, SummaryStats, SweepAxis, SweepPoint, SweepSetup, ValueSurface,
};
use serde::Serialize;

use crate::artifacts::{rho_label, Artifacts};
use crate::config::ExperimentConfig;
use crate::CliError;

/// Largest accepted QVI residual relative to `max(1, max |h|)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

const POLICY_UNITS: &str = "q and l in units; depths in price units; execute 1 = take one unit now";

fn enabled(scenario: ScenarioName, rho_tilde: f64, xi: f64) -> InternalExchange {
    InternalExchange::Enabled(scenario_preset(scenario, rho_tilde, xi))
}

fn solve_for(cfg: &ExperimentConfig, internal: &InternalExchange) -> Result<(ValueSurface, ExecutionRegion), CliError> {
    let grid = cfg.solver.grid(&cfg.market, internal)?;
    Ok(solve(&cfg.market, internal, &grid)?)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
struct BoundaryAtL {
    l: u32,
    q_star: Option<i64>,
}

#[derive(Debug, Clone, Serialize)]
struct SolveMeta {
    config_hash: String,
    scenario: ScenarioName,
    internal: InternalExchange,
    dt: f64,
    n_steps: usize,
    q_min: i64,
    q_max: i64,
    lbar: u32,
    dump_stride: usize,
    qvi_residual: f64,
    value_scale: f64,
    relative_residual: f64,
    h_initial: f64,
    boundary_t0: Vec<BoundaryAtL>,
}

/// Solves the configured scenario at every offset of `rho_grid` and writes a strided binary
/// dump, the `t = 0` slice as CSV and a JSON metadata record.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let mut out = Artifacts::new(&cfg.output_dir, &cfg.hash());
    let group = cfg.scenario.as_str();
    let mut worst: Option<(f64, f64)> = None;
    for &rho in &cfg.rho_grid {
        let internal = enabled(cfg.scenario, rho, cfg.fee);
        let (surface, region) = solve_for(cfg, &internal)?;
        let g = surface.grid;
        let residual = surface.qvi_residual();
        let value_scale = surface.value_scale();
        let relative = residual / value_scale.max(1.0);
        let label = rho_label(rho);
        eprintln!("solve {group} rho={label}: relative residual {relative:.3e}");

        let mut bin = Vec::new();
        surface
            .write_binary(&mut bin, cfg.solver.dump_stride)
            .expect("writing to memory cannot fail");
        out.write(out.path("solve", group, &label, "bin"), &bin)?;
        out.write_csv(
            out.path("solve", group, &label, "csv"),
            "t_seconds in s; q and l in units; h in price units",
            |w| surface.write_csv(w, &[0]),
        )?;
        let meta = SolveMeta {
            config_hash: out.hash().to_string(),
            scenario: cfg.scenario,
            internal,
            dt: g.dt,
            n_steps: g.n_steps,
            q_min: g.q_min,
            q_max: g.q_max,
            lbar: g.lbar,
            dump_stride: cfg.solver.dump_stride,
            qvi_residual: residual,
            value_scale,
            relative_residual: relative,
            h_initial: surface.h(0, 0, g.lbar)?,
            boundary_t0: (1..=g.lbar)
                .map(|l| BoundaryAtL { l, q_star: region.boundary(0, l) })
                .collect(),
        };
        let mut json = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
        json.push(b'\n');
        out.write(out.path("solve", group, &label, "json"), &json)?;
        if (relative.is_nan() || relative > RESIDUAL_TOL) && worst.is_none_or(|(_, r)| relative > r) {
            worst = Some((rho, relative));
        }
    }
    if let Some((rho, r)) = worst {
        return Err(CliError::Numerical(format!(
            "relative QVI residual {r:.3e} at rho_tilde {rho} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok(out.into_written())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub rho_tilde: f64,
    pub l: u32,
    /// Largest inventory where taking is optimal at `t = 0`; `None` when nowhere.
    pub q_star: Option<i64>,
}

/// Execution boundary at `t = 0` for every offset of `boundary_rho_grid` and every `l >= 1`.
pub fn boundary_curve(cfg: &ExperimentConfig, scenario: ScenarioName) -> Result<Vec<BoundaryPoint>, CliError> {
    let mut points = Vec::new();
    for &rho in &cfg.boundary_rho_grid {
        let internal = enabled(scenario, rho, cfg.fee);
        let (_, region) = solve_for(cfg, &internal)?;
        for l in 1..=internal.max_liquidity() {
            points.push(BoundaryPoint { rho_tilde: rho, l, q_star: region.boundary(0, l) });
        }
    }
    Ok(points)
}

/// Depth-versus-inventory tables for every scenario and the reference model, plus the
/// boundary-versus-offset curves for Iceberg and TWAP.
pub fn cmd_figures(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let mut out = Artifacts::new(&cfg.output_dir, &cfg.hash());
    let label = rho_label(cfg.figure_rho);
    for scenario in ScenarioName::ALL {
        let (surface, region) = solve_for(cfg, &enabled(scenario, cfg.figure_rho, cfg.fee))?;
        let policy = stationary_policy(&surface, &region);
        drop((surface, region));
        out.write_csv(out.path("figures", scenario.as_str(), &label, "csv"), POLICY_UNITS, |w| {
            policy.write_csv(w)
        })?;
    }
    let (surface, region) = solve_for(cfg, &InternalExchange::Disabled)?;
    let reference = stationary_policy(&surface, &region);
    out.write_csv(out.path("figures", "as_reference", "none", "csv"), POLICY_UNITS, |w| {
        reference.write_csv(w)
    })?;

    for scenario in [ScenarioName::Iceberg, ScenarioName::Twap] {
        let points = boundary_curve(cfg, scenario)?;
        out.write_csv(
            out.path("figures", scenario.as_str(), "boundary", "csv"),
            "rho_tilde in price units; boundary_q in units, empty when no state executes",
            |w| {
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(["rho_tilde", "l", "boundary_q"])?;
                for p in &points {
                    csv.write_record([p.rho_tilde.to_string(), p.l.to_string(), fmt_opt(p.q_star)])?;
                }
                csv.flush()
            },
        )?;
    }
    Ok(out.into_written())
}

#[derive(Debug, Clone, Serialize)]
pub struct TableCell {
    pub scenario: ScenarioName,
    pub rho_tilde: f64,
    pub optimal: SummaryStats,
    pub naive: SummaryStats,
}

/// Simulates the frozen optimal policy and the naive benchmark for every scenario and every
/// offset of `rho_grid`, with the same seed throughout.
pub fn table_results(cfg: &ExperimentConfig) -> Result<Vec<TableCell>, CliError> {
    let (ref_surface, ref_region) = solve_for(cfg, &InternalExchange::Disabled)?;
    let mut cells = Vec::new();
    for scenario in ScenarioName::ALL {
        for &rho in &cfg.rho_grid {
            let internal = enabled(scenario, rho, cfg.fee);
            let policy = {
                let (surface, region) = solve_for(cfg, &internal)?;
                stationary_policy(&surface, &region)
            };
            let optimal = run_monte_carlo(&policy, &cfg.market, &internal, &cfg.sim)?.summary;
            let bench = NaiveBenchmark::new(
                &ref_surface,
                &ref_region,
                BenchmarkConfig { iota: cfg.margin, rho_tilde: rho },
            )?;
            let naive = run_monte_carlo(&bench, &cfg.market, &internal, &cfg.sim)?.summary;
            eprintln!(
                "tables {scenario} rho={}: optimal pnl {:.4}, naive pnl {:.4}",
                rho_label(rho),
                optimal.pnl_mean,
                naive.pnl_mean
            );
            cells.push(TableCell { scenario, rho_tilde: rho, optimal, naive });
        }
    }
    Ok(cells)
}

type Column = (String, fn(&SummaryStats) -> String);

fn write_table<W: Write>(w: W, cells: &[TableCell], rhos: &[f64], columns: &[Column]) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["scenario".to_string(), "strategy".to_string()];
    for &rho in rhos {
        for (name, _) in columns {
            header.push(format!("{name}[rho={}]", rho_label(rho)));
        }
    }
    header.push("valid".into());
    csv.write_record(&header)?;
    for scenario in ScenarioName::ALL {
        let row_cells: Vec<&TableCell> = cells.iter().filter(|c| c.scenario == scenario).collect();
        for (strategy, pick) in [
            ("optimal", (|c: &TableCell| &c.optimal) as fn(&TableCell) -> &SummaryStats),
            ("naive", |c: &TableCell| &c.naive),
        ] {
            let mut row = vec![scenario.to_string(), strategy.to_string()];
            let mut valid = true;
            for cell in &row_cells {
                let stats = pick(cell);
                valid &= stats.valid;
                row.extend(columns.iter().map(|(_, f)| f(stats)));
            }
            row.push((valid as u8).to_string());
            csv.write_record(&row)?;
        }
    }
    csv.flush()
}

/// P&L and first-fill tables in the scenario x strategy by offset layout, plus every summary
/// as JSON. Fails with an invalid-run error after writing if any cell clamped its state.
pub fn cmd_tables(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let cells = table_results(cfg)?;
    let mut out = Artifacts::new(&cfg.output_dir, &cfg.hash());
    let pnl_columns: [Column; 2] = [
        ("pnl_mean".into(), |s| (s.pnl_mean * s.report_scale).to_string()),
        ("pnl_std".into(), |s| (s.pnl_std * s.report_scale).to_string()),
    ];
    let fill_columns: [Column; 4] = [
        ("first_fill_mean".into(), |s| fmt_opt(s.fill_time_mean)),
        ("first_fill_std".into(), |s| fmt_opt(s.fill_time_std)),
        ("fill_fraction".into(), |s| s.fill_fraction.to_string()),
        ("censored_first_fill_mean".into(), |s| s.censored_fill_time_mean.to_string()),
    ];
    out.write_csv(
        out.path("tables", "all", "grid", "pnl.csv"),
        &format!("P&L in price units x report_scale ({})", cfg.sim.report_scale),
        |w| write_table(w, &cells, &cfg.rho_grid, &pnl_columns),
    )?;
    out.write_csv(
        out.path("tables", "all", "grid", "fill_time.csv"),
        "first fill time in s over filled paths; censored mean counts unfilled paths at the horizon",
        |w| write_table(w, &cells, &cfg.rho_grid, &fill_columns),
    )?;
    let mut json = serde_json::to_vec_pretty(&cells).expect("summaries serialize");
    json.push(b'\n');
    out.write(out.path("tables", "all", "grid", "summary.json"), &json)?;

    let invalid: Vec<String> = cells
        .iter()
        .filter(|c| !(c.optimal.valid && c.naive.valid))
        .map(|c| format!("{} rho={}", c.scenario, rho_label(c.rho_tilde)))
        .collect();
    if !invalid.is_empty() {
        return Err(CliError::InvalidRun(format!("state clamped in {}", invalid.join(", "))));
    }
    Ok(out.into_written())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResults {
    pub fee: Vec<SweepPoint>,
    pub margin: Vec<SweepPoint>,
}

pub fn sweep_results(cfg: &ExperimentConfig) -> Result<SweepResults, CliError> {
    let setup = SweepSetup {
        market: cfg.market.clone(),
        scenario: cfg.scenario,
        rho_tilde: cfg.sweep_rho,
        solver: cfg.solver.settings(),
        sim: cfg.sim.clone(),
    };
    Ok(SweepResults {
        fee: sweep(&setup, SweepAxis::Fee, &cfg.fee_grid)?,
        margin: sweep(&setup, SweepAxis::Margin, &cfg.margin_grid)?,
    })
}

/// Fee and margin sweeps of the configured scenario at `sweep_rho`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let results = sweep_results(cfg)?;
    let mut out = Artifacts::new(&cfg.output_dir, &cfg.hash());
    let scale = cfg.sim.report_scale;
    let points: Vec<&SweepPoint> = results.fee.iter().chain(&results.margin).collect();
    out.write_csv(
        out.path("sweep", cfg.scenario.as_str(), &rho_label(cfg.sweep_rho), "csv"),
        &format!(
            "value in price units; P&L in price units x report_scale ({scale}); volume rate in units per s"
        ),
        |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record([
                "axis",
                "value",
                "optimal_pnl_mean",
                "optimal_pnl_std",
                "optimal_volume_rate",
                "naive_pnl_mean",
                "naive_pnl_std",
                "naive_volume_rate",
                "reference_pnl_mean",
                "reference_volume_rate",
                "valid",
            ])?;
            for p in &points {
                let axis = match p.axis {
                    SweepAxis::Fee => "fee",
                    SweepAxis::Margin => "margin",
                };
                let valid = p.optimal.valid && p.naive.valid && p.reference.valid;
                csv.write_record([
                    axis.to_string(),
                    p.value.to_string(),
                    (p.optimal.pnl_mean * scale).to_string(),
                    (p.optimal.pnl_std * scale).to_string(),
                    p.optimal.volume_rate_mean.to_string(),
                    (p.naive.pnl_mean * scale).to_string(),
                    (p.naive.pnl_std * scale).to_string(),
                    p.naive.volume_rate_mean.to_string(),
                    (p.reference.pnl_mean * scale).to_string(),
                    p.reference.volume_rate_mean.to_string(),
                    (valid as u8).to_string(),
                ])?;
            }
            csv.flush()
        },
    )?;
    if points.iter().any(|p| !(p.optimal.valid && p.naive.valid && p.reference.valid)) {
        return Err(CliError::InvalidRun("state clamped during the sweep".into()));
    }
    Ok(out.into_written())
}
