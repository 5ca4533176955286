//! Command-line front end: plan, reconstruct, eval, audit, gen and rerun.
//!
//! Exit codes: 0 on success, 2 for unusable input (bad flags, unreadable or
//! malformed files), 3 when a run fails after its inputs were accepted.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "historiographer", version, about = "Search-history reconstruction and session-hijack simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build a prefix plan from a word list.
    Plan(PlanArgs),
    /// Attack one user's history and score the result.
    Reconstruct(ReconstructArgs),
    /// Attack every history in a dataset and aggregate recall.
    Eval(EvalArgs),
    /// Count users in a traffic trace and audit hijackable services.
    Audit(AuditArgs),
    /// Generate a synthetic history dataset.
    Gen(GenArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Plan(_) => "plan",
            Command::Reconstruct(_) => "reconstruct",
            Command::Eval(_) => "eval",
            Command::Audit(_) => "audit",
            Command::Gen(_) => "gen",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionArg {
    Mass,
    Rank,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PlanArgs {
    /// Newline-separated word list; the bundled English list when omitted.
    pub corpus: Option<PathBuf>,
    /// Share of corpus items the seeds must cover.
    #[arg(long, default_value_t = 0.9)]
    pub mass: f64,
    /// Seed prefix length.
    #[arg(long, default_value_t = 2)]
    pub length: usize,
    /// Longest prefix length with corpus statistics (at least --length).
    #[arg(long, default_value_t = 3)]
    pub max_stats_length: usize,
    /// `letters`, `alnum`, `alnum-space` or a literal character list.
    #[arg(long, default_value = "letters")]
    pub alphabet: String,
    #[arg(long, value_enum, default_value_t = SelectionArg::Mass)]
    pub selection: SelectionArg,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisciplineArg {
    Priority,
    LevelOrder,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReconstructArgs {
    /// JSON-lines history file.
    pub history: PathBuf,
    /// Plan written by `plan`.
    pub plan: PathBuf,
    /// Request budget; unlimited when omitted.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Longest prefix to request; unlimited when omitted.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// User to attack when the file holds several histories.
    #[arg(long)]
    pub user: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub descent_threshold: usize,
    #[arg(long, value_enum, default_value_t = DisciplineArg::Priority)]
    pub discipline: DisciplineArg,
    /// Popular queries, most popular first, used to fill suggestion lists.
    #[arg(long)]
    pub generic: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `.jsonl` histories, `.json` synthetic configuration, anything else AOL TSV.
    Auto,
    Jsonl,
    Aol,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Histories (JSON lines), an AOL-format log, or a synthetic-generator configuration.
    pub dataset: PathBuf,
    /// Plan written by `plan`.
    pub plan: PathBuf,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Overrides the seed of a synthetic-generator configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = DatasetFormat::Auto)]
    pub format: DatasetFormat,
    /// Also write mean recall at budgets 110, 440 and 2000.
    #[arg(long)]
    pub curve: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AuditArgs {
    /// JSON-lines traffic trace.
    pub trace: PathBuf,
    /// Service catalog; the bundled Google catalog when omitted.
    pub catalog: Option<PathBuf>,
    /// Reject cookies replayed from an address other than the capturing one.
    #[arg(long)]
    pub enforce_ip_binding: bool,
    /// Address the attacker replays from; each session's own address when omitted.
    #[arg(long)]
    pub replay_ip: Option<String>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 10)]
    pub users: usize,
    /// Distinct queries per user: `N` or `MIN..MAX`.
    #[arg(long, default_value = "50..200")]
    pub entries: String,
    #[arg(long, default_value_t = 0.5)]
    pub clicked_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Word list to draw queries from; the bundled English list when omitted.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub max_words: usize,
    #[arg(long, default_value_t = 1.0)]
    pub zipf_exponent: f64,
    #[arg(long, default_value_t = 0.0)]
    pub navigational_fraction: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("historiographer {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
