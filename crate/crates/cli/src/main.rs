//! `spreadlab` command-line tool. Every subcommand runs one pipeline stage
//! against a TOML config; see `spreadlab --help`.
//!
//! Exit codes: 0 on success, 2 for configuration problems (including
//! missing input files), 3 for data problems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spreadlab::pipeline::{Pipeline, PipelineConfig, Stage};
use spreadlab::synth::read_id_list;
use spreadlab::Error;

#[derive(Parser)]
#[command(
    name = "spreadlab",
    version,
    about = "Misinformation-sharing behavior labeling and classification"
)]
struct Cli {
    /// Pipeline configuration (TOML). `seed` is required.
    #[arg(short, long, global = true, default_value = "spreadlab.toml")]
    config: PathBuf,

    /// Override a config key, e.g. `--set embed.dim=32`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus into the data directory.
    Simulate,
    /// Build the follow graph snapshot from the edge list.
    BuildGraph,
    /// Derive exposures and label users.
    Label,
    /// Train node embeddings.
    Embed,
    /// Fuse embeddings and profiles for labeled users.
    Features,
    /// Disengaged vs. others, with cross-validation.
    Stage1,
    /// Four engaged classes, with cross-validation and baselines.
    Stage2,
    /// Predict classes for users from network and profile features.
    Predict {
        /// File with one user id per line. Defaults to the holdout list.
        #[arg(long, conflicts_with = "user")]
        users: Option<PathBuf>,
        /// A user id; repeatable.
        #[arg(long)]
        user: Vec<String>,
    },
    /// Flatten the stage reports into report.csv.
    Report,
    /// build-graph through report in order.
    All,
}

fn run(cli: Cli) -> spreadlab::Result<()> {
    let cfg = PipelineConfig::load(&cli.config, &cli.overrides)?;
    let pipeline = Pipeline::new(cfg)?;
    let stage = match cli.command {
        Command::Simulate => Stage::Simulate,
        Command::BuildGraph => Stage::BuildGraph,
        Command::Label => Stage::Label,
        Command::Embed => Stage::Embed,
        Command::Features => Stage::Features,
        Command::Stage1 => Stage::Stage1,
        Command::Stage2 => Stage::Stage2,
        Command::Predict { users, user } => {
            let ids = match users {
                Some(path) => Some(read_id_list(std::fs::File::open(&path).map_err(|source| {
                    Error::File {
                        path: path.clone(),
                        source,
                    }
                })?)?),
                None if !user.is_empty() => Some(user),
                None => None,
            };
            let preds = pipeline.predict(ids.as_deref())?;
            log::info!(
                "wrote {} prediction(s) to {}",
                preds.len(),
                pipeline.artifact(spreadlab::pipeline::artifacts::PREDICTIONS).display()
            );
            return Ok(());
        }
        Command::Report => Stage::Report,
        Command::All => Stage::All,
    };
    pipeline.run(stage)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
