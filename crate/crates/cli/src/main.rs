mod commands;
mod config;
mod exit;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gaitrehab_core::grading::Scheme;

use config::RunConfig;
use exit::UsageError;

#[derive(Parser, Debug)]
#[command(name = "gaitrehab", version, about = "Gait quantification from body-worn IMUs")]
struct Cli {
    /// TOML file with [pipeline], [selection], [classifier] and [grading] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, short, global = true, default_value = "out")]
    output: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the synthetic acceptance cohorts.
    Fixtures(FixturesArgs),
    /// Extract the 243 features of every trial in a manifest.
    Extract(ExtractArgs),
    /// Rank significant features by SNR.
    Select(SelectArgs),
    /// Train LDA, PCA and NB classifiers and evaluate them on the test split.
    TrainEval(TrainEvalArgs),
    /// Grade subjects and correlate grades with recovery time.
    Grade(GradeArgs),
    /// Summarise the JSON outputs of a run directory.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CohortKind {
    Standard,
    Null,
    Recovery,
    All,
}

#[derive(Args, Debug)]
pub struct FixturesArgs {
    #[arg(long, value_enum, default_value = "all")]
    cohort: CohortKind,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// One row per sliding window instead of per trial.
    #[arg(long)]
    windowed: bool,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainEvalArgs {
    #[arg(long)]
    features: PathBuf,
    /// Use this selection instead of selecting on the training split.
    #[arg(long)]
    selection: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GradeArgs {
    /// Feature CSV whose training split defines the grading models.
    #[arg(long, required_unless_present = "model")]
    train: Option<PathBuf>,
    /// Previously saved grading model(s) instead of training data.
    #[arg(long, conflicts_with = "train")]
    model: Vec<PathBuf>,
    /// Feature CSV of the subjects to grade; the training file by default.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, conflicts_with = "model")]
    selection: Option<PathBuf>,
    /// Restrict to these schemes.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Vec<Scheme>,
    /// Also write one SVG scatter per scheme.
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directory; the output directory by default.
    #[arg(long)]
    dir: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: gaitrehab_core::Error| e.to_string())
}

pub struct Context {
    pub cfg: RunConfig,
    pub output: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(UsageError("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match &cli.command {
        Command::Extract(a) if a.windowed => cfg.pipeline.mode = gaitrehab_core::pipeline::Mode::Windowed,
        Command::Select(a) => {
            cfg.selection.alpha = a.alpha.unwrap_or(cfg.selection.alpha);
            cfg.selection.k = a.k.unwrap_or(cfg.selection.k);
        }
        Command::Grade(a) => {
            if !a.scheme.is_empty() {
                cfg.grading.schemes = a.scheme.clone();
            }
            cfg.grading.svg |= a.svg;
        }
        _ => {}
    }
    cfg.validate()?;
    let ctx = Context { cfg, output: cli.output };
    match cli.command {
        Command::Fixtures(a) => commands::fixtures(&ctx, &a),
        Command::Extract(a) => commands::extract(&ctx, &a),
        Command::Select(a) => commands::select(&ctx, &a),
        Command::TrainEval(a) => commands::train_eval(&ctx, &a),
        Command::Grade(a) => commands::grade(&ctx, &a),
        Command::Report(a) => commands::report(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e) as u8)
        }
    }
}
