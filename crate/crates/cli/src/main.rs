//! `recad`: dataset conversion, evaluation, rewards, curricula and a mock
//! GRPO harness from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use recad_core::FailureCategory;

#[derive(Parser, Debug)]
#[command(name = "recad", version, about = "Sketch-extrude CAD scripts: convert, evaluate, reward, curriculum, harness")]
#[command(after_help = "Set RECAD_LOG (error, warn, info, debug, trace) to control log output on stderr.")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Voxel grid resolution per axis (default 64; 32 for curriculum and harness-sim)
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Seed for sampling and the mock policy
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Similarity gate of the geometric reward
    #[arg(long, global = true, default_value_t = 0.55)]
    pub tau: f64,
    /// Weight of the geometric reward term
    #[arg(long, global = true, default_value_t = 0.1)]
    pub lambda1: f64,
    /// Weight of the format reward term
    #[arg(long, global = true, default_value_t = 0.9)]
    pub lambda2: f64,
    /// Hardness threshold on the best of N sampled rewards
    #[arg(long = "tau-h", global = true, default_value_t = 0.8)]
    pub tau_h: f64,
    /// Similarity a rewritten script must exceed to be kept
    #[arg(long = "tau-s", global = true, default_value_t = 0.95)]
    pub tau_s: f64,
    /// Normalize solids (centroid and radius of gyration) before comparing
    #[arg(long, global = true)]
    pub normalize: bool,
    /// Script execution limits: inline JSON object or path to a JSON file,
    /// with keys max_steps, max_loop_iters, max_curves
    #[arg(long, global = true)]
    pub limits: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a model (external JSON, native JSON or script) to native JSON or a script
    Convert {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ConvertTarget::Native)]
        to: ConvertTarget,
        /// Output file; stdout when omitted
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate predictions against ground truth (files or directories paired by stem)
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        /// Surface samples per solid for the chamfer distance
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Reward of one answer text against a ground-truth model
    Reward {
        solution: PathBuf,
        gt: PathBuf,
        /// Pay nothing, format included, when the script fails
        #[arg(long)]
        strict: bool,
    },
    /// Build the primitive curriculum from a directory of models
    Curriculum {
        models: PathBuf,
        /// Manifest output (JSON lines); stdout when omitted
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Similarity above which primitives are duplicates
        #[arg(long, default_value_t = 0.95)]
        dedup_threshold: f64,
    },
    /// Hardness classification and mixed-objective steps with a mock policy
    HarnessSim {
        manifest: PathBuf,
        /// KL weight (required)
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Rollouts per question
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Clip range
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        /// Questions per step; all of them when omitted
        #[arg(long)]
        batch_size: Option<usize>,
        /// Mock policy settings as a JSON file
        #[arg(long)]
        mock: Option<PathBuf>,
        /// Train hard questions without guidance
        #[arg(long)]
        no_guidance: bool,
    },
    /// Export a model as an OBJ mesh or a voxel grid
    Export {
        model: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Output file; stdout when omitted
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvertTarget {
    Native,
    Script,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Obj,
    Voxel,
}

/// A failed run: usage errors exit 1, data errors exit 2.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data { category: FailureCategory, message: String },
}

impl Failure {
    pub fn data(category: FailureCategory, message: impl Into<String>) -> Self {
        Failure::Data { category, message: message.into() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RECAD_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data { category, message }) => {
            eprintln!("error: {category}: {message}");
            ExitCode::from(2)
        }
    }
}
