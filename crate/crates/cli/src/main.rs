//! `devrank`: developer metrics, project recommendation and hit-score
//! leaderboards from activity event logs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use devrank_core::Format;
use thiserror::Error;

use crate::config::{Overrides, SynthOverrides};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or other runtime failure
  2  usage or configuration error (bad flag value, unknown metric or developer)
  3  input parse failure
  4  empty result (no events, or nothing to recommend)";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Empty(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Empty(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "devrank", version, about, after_help = EXIT_CODES)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate event files, write the canonical store.
    #[command(after_help = EXIT_CODES)]
    Ingest(InputArgs),
    /// Evaluate metrics and write the hit-score leaderboard.
    #[command(after_help = EXIT_CODES)]
    Leaderboard(PipelineArgs),
    /// Top-k project recommendations for one developer.
    #[command(after_help = EXIT_CODES)]
    Recommend(RecommendArgs),
    /// Generate a seeded synthetic event log.
    #[command(after_help = EXIT_CODES)]
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Event file (JSONL or CSV); repeat to merge several.
    #[arg(short, long = "input", value_name = "FILE")]
    inputs: Vec<PathBuf>,

    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<Format>,

    /// Skip invalid records with a warning instead of failing.
    #[arg(long)]
    skip_invalid: bool,

    /// Output directory.
    #[arg(short, long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl InputArgs {
    fn overrides(self) -> Overrides {
        Overrides {
            inputs: self.inputs,
            format: self.format,
            skip_invalid: self.skip_invalid,
            out: self.out,
            ..Overrides::default()
        }
    }
}

#[derive(Debug, Args)]
struct ScoringArgs {
    /// Number of recommendations per developer.
    #[arg(short, long)]
    k: Option<usize>,

    /// Lower end of the rating scale.
    #[arg(long)]
    scale_lo: Option<f64>,

    /// Upper end of the rating scale.
    #[arg(long)]
    scale_hi: Option<f64>,

    /// Divide predictions by the similarity mass of contributing projects.
    #[arg(long)]
    normalize_prediction: bool,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    scoring: ScoringArgs,

    /// Comma-separated metric names or groups (all, all-single, all-fusion,
    /// all-binary-fusion, baseline).
    #[arg(short, long)]
    metrics: Option<String>,

    /// Recompute similarity matrices instead of reusing cached ones.
    #[arg(long)]
    no_cache: bool,
}

impl PipelineArgs {
    fn overrides(self) -> Overrides {
        Overrides {
            metrics: self.metrics,
            k: self.scoring.k,
            scale_lo: self.scoring.scale_lo,
            scale_hi: self.scoring.scale_hi,
            normalize_prediction: self.scoring.normalize_prediction,
            no_cache: self.no_cache,
            ..self.input.overrides()
        }
    }
}

#[derive(Debug, Args)]
struct RecommendArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Developer login to recommend for.
    #[arg(short, long)]
    developer: String,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for events.jsonl and events.config.json.
    #[arg(short, long, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    developers: Option<usize>,

    #[arg(long)]
    projects: Option<usize>,

    /// Distinct owners; projects are spread round-robin.
    #[arg(long)]
    owners: Option<usize>,

    /// Fraction of developer x project cells with activity.
    #[arg(long)]
    density: Option<f64>,

    /// Probability that a developer watches a given project.
    #[arg(long)]
    watch_rate: Option<f64>,

    #[arg(long)]
    kinds_per_pair: Option<usize>,

    /// Largest per-record count.
    #[arg(long)]
    count_max: Option<u64>,

    /// Draw counts from a Zipf law with this exponent instead of uniformly.
    #[arg(long, value_name = "S")]
    zipf: Option<f64>,
}

impl SynthArgs {
    fn overrides(&self) -> SynthOverrides {
        SynthOverrides {
            seed: self.seed,
            developers: self.developers,
            projects: self.projects,
            owners: self.owners,
            density: self.density,
            watch_rate: self.watch_rate,
            kinds_per_pair: self.kinds_per_pair,
            count_max: self.count_max,
            zipf: self.zipf,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(args) => commands::ingest(&file, args.overrides()),
        Command::Leaderboard(args) => commands::leaderboard(&file, args.overrides()),
        Command::Recommend(args) => {
            commands::recommend(&file, args.pipeline.overrides(), &args.developer)
        }
        Command::Synth(args) => {
            let out = args.out.clone();
            commands::synth(&file, args.overrides(), out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
