//! Argument parsing, validation, and dispatch for the `ruinlab` binary.
//!
//! Every subcommand validates its full request before computing anything,
//! writes results to standard output (or `--out`), and exits 0 on
//! success, 1 on any validation or runtime error, and 2 when a
//! `reproduce --strict` run finds unexplained differences against the
//! bundled references.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Deserialize;

use ruinlab_core::{
    ruin_probability, simulate, Principle, QueryConfig, RuinQuery,
};
use ruinlab_experiments::{
    benchmark_rules, benchmark_scale, chain_tables, figure_data, reproduce_chains,
    write_chain_csv, write_figure_csv, write_table_csv, write_table_diff, ChainReport,
    Correlation, Workbench, HORIZON, INITIAL_LEVEL, TABLE_TOLERANCE,
};

use crate::args::{
    Cli, Command, Format, MarkovArgs, QueryOverrides, ReproduceArgs, RuinArgs, RuinEmit,
    SimulateArgs, SimulateEmit, SweepArgs,
};
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses `argv`, runs the requested subcommand, and returns the process
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    configure_workers(worker_cap(cli.workers));
    match execute(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Ruin(args) => cmd_ruin(cli, args).map(|()| 0),
        Command::Simulate(args) => cmd_simulate(cli, args).map(|()| 0),
        Command::Markov(args) => cmd_markov(cli, args).map(|()| 0),
        Command::Reproduce(args) => cmd_reproduce(cli, args),
        Command::Sweep(args) => cmd_sweep(cli, args).map(|()| 0),
    }
}

/// `--workers`, falling back to the `RUINLAB_WORKERS` environment
/// variable; `None` or zero means one thread per core.
fn worker_cap(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("RUINLAB_WORKERS").ok()?.parse().ok())
}

fn configure_workers(cap: Option<usize>) {
    if let Some(n) = cap.filter(|&n| n > 0) {
        // A second configuration attempt in the same process is a no-op.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Formats to six significant digits, or 17 under `--full-precision`.
pub fn fmt_sig(v: f64, full_precision: bool) -> String {
    if full_precision {
        return format!("{v:.16e}");
    }
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn formatter(full_precision: bool) -> impl Fn(f64) -> String + Copy {
    move |v| fmt_sig(v, full_precision)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_config_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

/// Loads a query description and applies command-line overrides before
/// building the validated query.
fn load_query(path: &Path, overrides: &QueryOverrides) -> Result<RuinQuery> {
    let mut config = QueryConfig::from_json_str(&read_config_text(path)?)?;
    if let Some(q) = overrides.q {
        config.q = q;
    }
    if let Some(u0) = overrides.u0 {
        config.u0 = u0;
    }
    if let Some(horizon) = overrides.horizon {
        config.horizon = horizon;
    }
    if let Some(level) = overrides.initial_level {
        config.initial_level = level;
    }
    let mut query = config.build()?;
    if let Some(eps) = overrides.truncation_epsilon {
        query.dist = query.dist.clone().with_truncation_epsilon(eps)?;
    }
    Ok(query)
}

/// `H`/`M`/`L` (any case) as a correlation case; `all` as `None`.
fn parse_case(text: &str) -> Result<Option<Correlation>> {
    match text.to_ascii_uppercase().as_str() {
        "ALL" => Ok(None),
        "H" => Ok(Some(Correlation::High)),
        "M" => Ok(Some(Correlation::Moderate)),
        "L" => Ok(Some(Correlation::Low)),
        other => Err(Error::Invalid(format!(
            "unknown correlation case {other:?}; expected H, M, L, or all"
        ))),
    }
}

/// The serde token for a principle (`aggregate_reported`, ...), as used
/// in configuration files and sweep output.
fn principle_token(principle: Principle) -> String {
    match serde_json::to_value(principle) {
        Ok(serde_json::Value::String(s)) => s,
        _ => format!("{principle:?}"),
    }
}

// ---------------------------------------------------------------------------
// ruin
// ---------------------------------------------------------------------------

fn cmd_ruin(cli: &Cli, args: &RuinArgs) -> Result<()> {
    let query = load_query(&args.config, &args.overrides)?;
    if cli.verbose > 0 {
        eprintln!(
            "solving {} at q = {}, u0 = {}, horizon {}",
            principle_token(query.principle),
            query.q,
            query.u0,
            query.horizon
        );
    }
    let result = ruin_probability(&query)?;
    let fmt = formatter(cli.full_precision);
    let mut out = sink(&cli.out)?;
    match args.emit {
        RuinEmit::Value => writeln!(out, "{}", fmt(result.value))?,
        RuinEmit::Profile => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["u", "psi"])?;
            for u in 0..=query.u0.max(0) {
                let psi = result.psi_at(query.initial_level, u)?;
                w.write_record([u.to_string(), fmt(psi)])?;
            }
            w.flush()?;
        }
        RuinEmit::Json => {
            let doc = serde_json::json!({
                "value": result.value,
                "truncation_bound": result.truncation_bound,
                "principle": query.principle,
                "q": query.q,
                "u0": query.u0,
                "initial_level": query.initial_level + 1,
                "horizon": query.horizon,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    if args.paths == 0 {
        return Err(Error::Invalid("paths must be ≥ 1".into()));
    }
    let query = load_query(&args.config, &args.overrides)?;
    if cli.verbose > 0 {
        eprintln!("simulating {} paths with seed {}", args.paths, args.seed);
    }
    let estimate = simulate(&query, args.paths, args.seed)?;
    let fmt = formatter(cli.full_precision);
    let mut out = sink(&cli.out)?;
    match args.emit {
        SimulateEmit::Summary => writeln!(
            out,
            "estimate {} stderr {} ci95 [{}, {}] paths {} seed {}",
            fmt(estimate.p_hat),
            fmt(estimate.stderr),
            fmt(estimate.ci95.0),
            fmt(estimate.ci95.1),
            estimate.n_paths,
            estimate.seed
        )?,
        SimulateEmit::Value => writeln!(out, "{}", fmt(estimate.p_hat))?,
        SimulateEmit::Json => {
            let doc = serde_json::json!({
                "p_hat": estimate.p_hat,
                "stderr": estimate.stderr,
                "ci95": [estimate.ci95.0, estimate.ci95.1],
                "n_paths": estimate.n_paths,
                "seed": estimate.seed,
                "rng_id": estimate.rng_id,
                "overflow_mass": estimate.overflow_mass,
            });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// markov
// ---------------------------------------------------------------------------

fn cmd_markov(cli: &Cli, args: &MarkovArgs) -> Result<()> {
    let case = parse_case(&args.case)?;
    let chains = reproduce_chains(args.table)?;
    let chains: Vec<&ChainReport> = chains
        .iter()
        .filter(|c| case.is_none_or(|want| c.expected.correlation == want))
        .collect();
    let fmt = formatter(cli.full_precision);
    let mut out = sink(&cli.out)?;
    match args.format {
        Format::Csv => {
            for (i, chain) in chains.iter().enumerate() {
                if case.is_none() {
                    if i > 0 {
                        writeln!(out)?;
                    }
                    writeln!(out, "# case {}", chain.expected.correlation.letter())?;
                }
                write_chain_csv(chain, fmt, &mut out)?;
            }
        }
        Format::Json => {
            let docs: Vec<serde_json::Value> = chains
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "case": c.expected.correlation.letter().to_string(),
                        "matrix": c.matrix,
                        "stationary": c.stationary,
                        "expected_premium": c.premium,
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut out, &docs)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// reproduce
// ---------------------------------------------------------------------------

fn selected_tables(requested: &[u8]) -> Result<Vec<u8>> {
    if requested.is_empty() {
        return Ok(vec![1, 2, 3, 4]);
    }
    let mut tables = requested.to_vec();
    tables.sort_unstable();
    tables.dedup();
    for &table in &tables {
        if !(1..=4).contains(&table) {
            return Err(Error::Invalid(format!(
                "no benchmark table {table}; tables are numbered 1 to 4"
            )));
        }
    }
    Ok(tables)
}

fn cmd_reproduce(cli: &Cli, args: &ReproduceArgs) -> Result<i32> {
    let tables = selected_tables(&args.tables)?;
    let out_dir = cli.out.as_deref();
    if let Some(dir) = out_dir {
        if dir.is_file() {
            return Err(Error::Invalid(format!(
                "--out {} is an existing file; reproduce writes a directory tree",
                dir.display()
            )));
        }
        fs::create_dir_all(dir)?;
    }
    let fmt = formatter(cli.full_precision);
    let mut wb = Workbench::new(args.smoke);
    let mut stdout = io::stdout().lock();
    let mut faithful = true;

    for &table in &tables {
        if cli.verbose > 0 {
            eprintln!("recomputing table {table}...");
        }
        let started = Instant::now();
        let report = wb.table(table)?;
        let elapsed = started.elapsed().as_secs_f64();
        let ok = report.is_faithful(TABLE_TOLERANCE);
        faithful &= ok;
        let max_err = report
            .cells
            .iter()
            .map(|c| c.abs_err())
            .fold(0.0, f64::max);
        let diff_lines = report.diff_lines(TABLE_TOLERANCE);
        writeln!(
            stdout,
            "table {table}: {} cells, max |diff| {max_err:.1e}{} — {} ({elapsed:.2}s)",
            report.cells.len(),
            if diff_lines.is_empty() {
                String::new()
            } else {
                format!(", {} cells beyond tolerance", diff_lines.len())
            },
            if ok { "ok" } else { "DRIFTED" },
        )?;
        for line in &diff_lines {
            writeln!(stdout, "  {line}")?;
        }
        if let Some(dir) = out_dir {
            fs::create_dir_all(dir.join("tables"))?;
            fs::create_dir_all(dir.join("diffs"))?;
            let csv_file = fs::File::create(dir.join("tables").join(format!("table{table}.csv")))?;
            write_table_csv(report, fmt, io::BufWriter::new(csv_file))?;
            let diff_file = fs::File::create(dir.join("diffs").join(format!("table{table}.txt")))?;
            let _ = write_table_diff(report, io::BufWriter::new(diff_file))?;
        }
    }

    for &table in &tables {
        if !chain_tables().contains(&table) {
            continue;
        }
        for chain in &reproduce_chains(table)? {
            let letter = chain.expected.correlation.letter();
            let lines = chain.diff_lines();
            let ok = lines.is_empty();
            faithful &= ok;
            writeln!(
                stdout,
                "chain {table}{letter}: matrix err {:.1e}, stationary err {:.1e}, \
                 premium err {:.1e} — {}",
                chain.max_matrix_err(),
                chain.max_stationary_err(),
                chain.premium_err(),
                if ok { "ok" } else { "DRIFTED" },
            )?;
            for line in &lines {
                writeln!(stdout, "  {line}")?;
            }
            if let Some(dir) = out_dir {
                fs::create_dir_all(dir.join("markov"))?;
                let file = fs::File::create(
                    dir.join("markov").join(format!("chain{table}_{letter}.csv")),
                )?;
                write_chain_csv(chain, fmt, io::BufWriter::new(file))?;
            }
        }
    }

    if tables == [1, 2, 3, 4] {
        if let Some(dir) = out_dir {
            fs::create_dir_all(dir.join("figures"))?;
            for figure in 1..=8 {
                let data = figure_data(&mut wb, figure)?;
                let file =
                    fs::File::create(dir.join("figures").join(format!("fig{figure}.csv")))?;
                write_figure_csv(&data, fmt, io::BufWriter::new(file))?;
            }
            writeln!(stdout, "figures: wrote fig1.csv through fig8.csv")?;
        }
    }

    writeln!(
        stdout,
        "{}",
        if faithful {
            "reproduction faithful"
        } else {
            "REPRODUCTION DRIFTED BEYOND TOLERANCE"
        }
    )?;
    Ok(if args.strict && !faithful { 2 } else { 0 })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    /// Correlation case letter: H, M, or L.
    correlation: String,
    /// Initial surplus values.
    u: Vec<i64>,
    /// By-claim delay probabilities.
    q: Vec<f64>,
    principles: Vec<Principle>,
    /// Largest number of output rows the sweep may produce.
    #[serde(default = "default_budget")]
    budget: usize,
}

fn default_budget() -> usize {
    10_000
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let config: SweepConfig = serde_json::from_str(&read_config_text(&args.config)?)?;
    let correlation = parse_case(&config.correlation)?.ok_or_else(|| {
        Error::Invalid("sweep correlation must be a single case: H, M, or L".into())
    })?;
    let mut us = config.u.clone();
    us.sort_unstable();
    us.dedup();
    if us.is_empty() {
        return Err(Error::Invalid("sweep needs at least one surplus value".into()));
    }
    for &q in &config.q {
        if !q.is_finite() || !(0.0..=1.0).contains(&q) {
            return Err(Error::Invalid(format!(
                "delay probability must lie in [0, 1], got {q}"
            )));
        }
    }
    let mut qs = config.q.clone();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    if qs.is_empty() {
        return Err(Error::Invalid(
            "sweep needs at least one delay probability".into(),
        ));
    }
    if config.principles.is_empty() {
        return Err(Error::Invalid("sweep needs at least one principle".into()));
    }
    let principles: Vec<Principle> = Principle::ALL
        .into_iter()
        .filter(|p| config.principles.contains(p))
        .collect();
    let rows = us.len() * qs.len() * principles.len();
    if rows > config.budget {
        return Err(Error::Invalid(format!(
            "sweep grid has {rows} rows, exceeding the budget {}",
            config.budget
        )));
    }

    // One exact solve per (principle, q) pair at the largest surplus
    // covers every requested surplus below it.
    let u0 = *us.last().expect("validated non-empty");
    let mut values = vec![vec![vec![0.0_f64; principles.len()]; qs.len()]; us.len()];
    for (qi, &q) in qs.iter().enumerate() {
        for (pi, &principle) in principles.iter().enumerate() {
            if cli.verbose > 0 {
                eprintln!("sweep: solving {} at q = {q}", principle_token(principle));
            }
            let query = RuinQuery {
                principle,
                dist: correlation.dist(),
                q,
                scale: benchmark_scale(),
                rules: benchmark_rules(principle),
                u0,
                initial_level: INITIAL_LEVEL,
                horizon: HORIZON,
                emit_grid: false,
            };
            let result = ruin_probability(&query)?;
            let mut previous = f64::INFINITY;
            for (ui, &u) in us.iter().enumerate() {
                let psi = result.psi_at(INITIAL_LEVEL, u)?;
                if psi > previous + 1e-9 {
                    return Err(Error::Invalid(format!(
                        "internal: ruin probability rose from {previous} to {psi} \
                         between consecutive surplus values"
                    )));
                }
                previous = psi;
                values[ui][qi][pi] = psi;
            }
        }
    }

    let fmt = formatter(cli.full_precision);
    let out = sink(&cli.out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "q", "principle", "psi"])?;
    for (ui, &u) in us.iter().enumerate() {
        for (qi, &q) in qs.iter().enumerate() {
            for (pi, &principle) in principles.iter().enumerate() {
                w.write_record([
                    u.to_string(),
                    q.to_string(),
                    principle_token(principle),
                    fmt(values[ui][qi][pi]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
