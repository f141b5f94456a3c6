mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dynprice_core::orchestrator::write_sweep_csv;
use dynprice_core::{run, save_csv, Exec, SweepRow};

use config::FileConfig;

/// Dynamic electricity pricing simulator.
#[derive(Debug, Parser)]
#[command(name = "dynprice", version)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory, overriding `output_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the configured scenario to `<out>/scenario.csv`.
    Generate(Common),
    /// Simulate the horizon and write report.json, ledger.csv and
    /// trajectory.csv. Exits with 2 when a constraint is violated.
    Run(Common),
    /// Repeat the run over values of one numeric setting and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted setting path, e.g. `demand_model.elasticity_scale`, or
        /// `forecasters.gamma` for all forecasters at once.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    config.policy.exec = exec;
    let common = match &cli.command {
        Command::Generate(c) | Command::Run(c) => c,
        Command::Sweep { common, .. } => common,
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| config.output_dir.clone());

    match &cli.command {
        Command::Generate(_) => generate(&config, &out),
        Command::Run(_) => run_once(&config, &out),
        Command::Sweep { axis, values, .. } => sweep(&config, &out, axis, values, exec),
    }
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn generate(config: &FileConfig, out: &Path) -> Result<ExitCode> {
    let scenario = config.run_config()?.scenario()?;
    create_dir(out)?;
    let path = out.join("scenario.csv");
    save_csv(&scenario, &path)?;
    println!("{} rows written to {}", scenario.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn run_once(config: &FileConfig, out: &Path) -> Result<ExitCode> {
    let run_config = config.run_config()?;
    let scenario = run_config.scenario()?;
    let result = run(&run_config, &scenario)?;
    create_dir(out)?;
    result
        .report
        .write_json(create(&out.join("report.json"))?)?;
    result.ledger.write_csv(create(&out.join("ledger.csv"))?)?;
    result.write_trajectory_csv(&scenario, create(&out.join("trajectory.csv"))?)?;

    let r = &result.report;
    println!(
        "S = {:.3} %  B = {:.3} %  R = {:.3} %  consumer_ok = {}  producer_ok = {}",
        r.indicator_s_pct, r.indicator_b_pct, r.indicator_r_pct, r.consumer_ok, r.producer_ok
    );
    for flag in &r.flags {
        println!("flag: {flag}");
    }
    println!("outputs in {}", out.display());
    Ok(if r.constraints_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn sweep(
    config: &FileConfig,
    out: &Path,
    axis: &str,
    values: &[f64],
    exec: Exec,
) -> Result<ExitCode> {
    if values.is_empty() {
        bail!("--values needs at least one value");
    }
    let configs = values
        .iter()
        .map(|&v| Ok((v, config.with_axis(axis, v)?.run_config()?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = exec.map(configs, |(value, run_config)| -> Result<SweepRow> {
        let scenario = run_config.scenario()?;
        let result = run(&run_config, &scenario).with_context(|| format!("{axis} = {value}"))?;
        Ok(SweepRow::from_report(value, &result.report))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    create_dir(out)?;
    let path = out.join("sweep.csv");
    write_sweep_csv(&rows, create(&path)?)?;
    for row in &rows {
        println!(
            "{axis} = {}: S = {:.3} %  B = {:.3} %  R = {:.3} %  consumer_ok = {}  producer_ok = {}",
            row.value,
            row.indicator_s_pct,
            row.indicator_b_pct,
            row.indicator_r_pct,
            row.consumer_ok,
            row.producer_ok
        );
    }
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(ExitCode::SUCCESS)
}
