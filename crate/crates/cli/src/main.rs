use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use irsan_core::harness::{emit_csv, sweep, write_traces, Axis, Baseline, ScenarioConfig};
use irsan_core::Setup;

/// Monte-Carlo secrecy-rate sweeps for IRS-assisted links with artificial noise.
#[derive(Parser, Debug)]
#[command(name = "irsan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep one parameter over all requested baselines and write a CSV.
    Run(RunArgs),
    /// Print the default configuration as TOML.
    Defaults {
        /// Use the larger N = 20, K = 5 scenario.
        #[arg(long)]
        paper_scale: bool,
    },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Scenario file (TOML); missing keys take their defaults.
    #[arg(long)]
    config: PathBuf,
    /// Swept parameter: pmax (dBm), k or n.
    #[arg(long)]
    axis: Axis,
    /// Comma-separated sweep values.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    values: Vec<f64>,
    /// Channel realizations per cell; defaults to the config value.
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Eavesdropper placement: a (near the surface) or b (far from it).
    #[arg(long)]
    setup: Option<Setup>,
    /// Baseline to run: an,irs | an | irs | none. Repeat for several;
    /// all four by default.
    #[arg(long = "baseline")]
    baselines: Vec<Baseline>,
    /// Master seed; defaults to the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Use N = 20 elements on a 5-row surface and K = 5 eavesdroppers.
    #[arg(long)]
    paper_scale: bool,
    /// Also write per-run convergence traces as JSON lines.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Log per-iteration progress.
    #[arg(short, long)]
    verbose: bool,
}

fn scenario(args: &RunArgs) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if args.paper_scale {
        let paper = ScenarioConfig::paper_scale();
        cfg.n = paper.n;
        cfg.k = paper.k;
        cfg.channel.ura_rows = paper.channel.ura_rows;
    }
    if let Some(setup) = args.setup {
        cfg.setup = setup;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = scenario(&args)?;
    let baselines = if args.baselines.is_empty() {
        Baseline::ALL.to_vec()
    } else {
        args.baselines.clone()
    };
    log::info!(
        "sweeping {} over {:?}: {} trials x {} baselines, setup {}, config {}",
        args.axis,
        args.values,
        cfg.trials,
        baselines.len(),
        cfg.setup.label(),
        &cfg.hash()[..12]
    );
    let result = sweep(&cfg, args.axis, &args.values, cfg.trials, &baselines)?;
    emit_csv(&result.table, &args.out)?;
    if let Some(path) = &args.traces {
        write_traces(&result.records, path)?;
    }
    for c in &result.table.cells {
        println!(
            "{}={:<8} {:<7} {:>9.4} ± {:.4} bps/Hz  ({} ok, {} failed)",
            c.axis, c.value, c.baseline, c.mean_rate_bps_hz, c.stderr, c.trials_ok, c.trials_failed
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = matches!(&cli.command, Command::Run(a) if a.verbose);
    env_logger::Builder::new()
        .filter_level(if verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Defaults { paper_scale } => {
            let cfg = if paper_scale {
                ScenarioConfig::paper_scale()
            } else {
                ScenarioConfig::default()
            };
            cfg.to_toml_string()
                .map(|s| print!("{s}"))
                .context("serializing defaults")
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
