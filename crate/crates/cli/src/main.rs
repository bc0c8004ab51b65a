use std::path::PathBuf;
use std::process::ExitCode;

use bosewalk::graph_file::{load_graph, parse_graph};
use bosewalk::runner::{self, RunOptions, RunSummary, OUT_DIR_ENV};
use bosewalk::{CliError, Result};
use clap::{Args, Parser, Subcommand};

/// Shared-coin many-boson discrete-time quantum walks.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration (or a run manifest) from step 0.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Continue a run from one of its snapshots.
    Resume {
        snapshot: PathBuf,
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a graph file.
    Validate { graph: PathBuf },
    /// Compare the sparse engine with the dense oracle on a small configuration.
    #[command(hide = true)]
    OracleCompare {
        config: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    steps: Option<u64>,
    /// Output directory; defaults to the config's `out`, then the environment.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    snapshot_every: Option<u64>,
    /// Interpretation toggle as `name=value`; repeatable.
    #[arg(long = "toggle", value_parser = parse_toggle)]
    toggles: Vec<(String, String)>,
    #[arg(long, short)]
    quiet: bool,
}

impl Overrides {
    fn options(self) -> RunOptions {
        RunOptions {
            steps: self.steps,
            out: self.out,
            threads: self.threads,
            snapshot_every: self.snapshot_every,
            toggles: self.toggles,
            progress: !self.quiet,
        }
    }
}

fn parse_toggle(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .ok_or_else(|| format!("expected name=value, got {s:?}"))
}

fn summarize(summary: &RunSummary) {
    println!("wrote {} (final step {})", summary.dir.display(), summary.final_step);
    match summary.regime.step {
        Some(step) => println!("regime change at step {step}, terminal dimensions {:?}", summary.regime.terminal),
        None => println!("no regime change detected"),
    }
}

fn validate(path: &PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let spec = parse_graph(&text)?.to_unchecked_spec()?;
    for defect in spec.permutation_defects() {
        println!("note: {defect}");
    }
    load_graph(path)?;
    println!("ok: {} vertices, coin order {}", spec.vertices(), spec.coin_order());
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, overrides } => summarize(&runner::run(&config, &overrides.options())?),
        Command::Resume { snapshot, config, overrides } => {
            summarize(&runner::resume(&snapshot, &config, &overrides.options())?)
        }
        Command::Validate { graph } => validate(&graph)?,
        Command::OracleCompare { config, steps } => {
            let options = RunOptions { steps, ..RunOptions::default() };
            let deviations = runner::oracle_compare(&config, &options)?;
            for (step, d) in deviations.iter().enumerate() {
                println!("{step},{d:e}");
            }
            let worst = deviations.iter().copied().fold(0.0, f64::max);
            println!("max deviation {worst:e}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
