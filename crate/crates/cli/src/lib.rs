//! Command-line front end: dataset generation, label distillation,
//! evaluation, event encoding and dataset validation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration.
    Usage(String),
    /// Unreadable, unwritable or malformed data.
    Data(anyhow::Error),
    /// A generated artifact failed its own consistency checks.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        CliError::Data(e.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "data error: {e:#}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "eventforge", version, about = "Synthetic stereo event data factory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run seed; overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output location; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labeled stereo event dataset.
    Generate(GenerateArgs),
    /// Transfer RGB-frame disparity maps onto the event camera.
    Distill(DistillArgs),
    /// Score predicted maps against references.
    Eval(EvalArgs),
    /// Stack an event file into a dense frame.
    Encode(EncodeArgs),
    /// Check a generated dataset directory.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Samples per baseline; overrides `simulation.samples`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Coarse virtual-time step; overrides `simulation.dtau`.
    #[arg(long)]
    pub dtau: Option<f64>,
    /// Comma-separated baselines in meters; overrides `rig.baselines`.
    #[arg(long)]
    pub baselines: Option<String>,
    /// Arbitrary override, `section.key=value`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Near depth clip in meters.
    #[arg(long)]
    pub clip_min: Option<f64>,
    /// Far depth clip in meters.
    #[arg(long)]
    pub clip_max: Option<f64>,
    /// RGB-frame disparity maps (PFM).
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Disparity,
    Depth,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, num_args = 1.., required = true)]
    pub pred: Vec<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    pub gt: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "disparity")]
    pub kind: EvalKind,
    /// Rendered images paired with `--pred` (depth mode).
    #[arg(long, num_args = 1..)]
    pub pred_images: Vec<PathBuf>,
    /// Reference images paired with `--gt` (depth mode).
    #[arg(long, num_args = 1..)]
    pub gt_images: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprKind {
    Tencode,
    VoxelGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameFormat {
    Stk,
    Pfm,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, value_enum, default_value = "tencode")]
    pub repr: ReprKind,
    /// Newest events kept by tencode; overrides `repr.tencode_count`.
    #[arg(long)]
    pub count: Option<usize>,
    /// Temporal bins for voxel-grid; overrides `repr.voxel_bins`.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum, default_value = "stk")]
    pub format: FrameFormat,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    pub dir: PathBuf,
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("EVENTFORGE_LOG", "warn");
    // A second initialization (tests calling `run` repeatedly) is harmless.
    let _ = env_logger::Builder::from_env(env).try_init();
}

pub fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Generate(a) => commands::generate::run(&a).map(|_| ()),
        Command::Distill(a) => commands::distill::run(&a),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Encode(a) => commands::encode::run(&a),
        Command::Validate(a) => commands::validate::run(&a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
