use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hpv_cli::commands::{run, write, Command};
use hpv_cli::config::{load, Settings};
use std::path::PathBuf;

/// Poisson-Voronoi percolation experiments in the hyperbolic plane.
///
/// Every run writes its outputs under the prefix given by --out together
/// with `<out>.record.json`, which holds the resolved settings. Passing that
/// record to --config (or to `replay`) repeats the run byte for byte.
/// The thread count comes from --threads or HPV_THREADS; results do not
/// depend on it.
#[derive(Parser)]
#[command(name = "hpv", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample a coloured Poisson process on a ball.
    Sample(RunArgs),
    /// Mean degree of the typical cell.
    Degree(RunArgs),
    /// Crossing probability of the black cluster of the origin.
    Percolate(RunArgs),
    /// Critical probability estimates over several intensities.
    PcSweep(RunArgs),
    /// Offspring mean and survival of the exploration process.
    Explore(RunArgs),
    /// Monte Carlo estimates of the exploration error terms.
    Xi(RunArgs),
    /// Mean numbers of good pseudopaths from the origin.
    Pseudopath(RunArgs),
    /// Picture of a tessellation (PNG and/or SVG).
    Render(RunArgs),
    /// Repeat a run from its record.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON settings, or a run record.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output prefix; files are `<out>.csv`, `<out>.record.json`, ...
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads (default: HPV_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct ReplayArgs {
    record: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Worker threads (default: HPV_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("HPV_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .with_context(|| format!("HPV_THREADS={v:?}"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (cmd, settings, out, threads) = match cli.command {
        Sub::Replay(a) => {
            let (name, s) = load(&a.record, None)?;
            let name = name.context("not a run record")?;
            (Command::from_name(&name)?, s, a.out, a.threads)
        }
        sub => {
            let (cmd, a) = match sub {
                Sub::Sample(a) => (Command::Sample, a),
                Sub::Degree(a) => (Command::Degree, a),
                Sub::Percolate(a) => (Command::Percolate, a),
                Sub::PcSweep(a) => (Command::PcSweep, a),
                Sub::Explore(a) => (Command::Explore, a),
                Sub::Xi(a) => (Command::Xi, a),
                Sub::Pseudopath(a) => (Command::Pseudopath, a),
                Sub::Render(a) => (Command::Render, a),
                Sub::Replay(_) => unreachable!(),
            };
            let file = match &a.config {
                Some(p) => load(p, Some(cmd.name()))?.1,
                None => Settings::default(),
            };
            let out = a
                .out
                .unwrap_or_else(|| PathBuf::from(format!("hpv-{}", cmd.name())));
            (cmd, a.settings.or(&file), out, a.threads)
        }
    };
    init_threads(threads)?;
    let (resolved, outputs) = run(cmd, settings)?;
    for path in write(&out, cmd, resolved, &outputs)? {
        println!("{}", path.display());
    }
    Ok(())
}
