//! Command-line surface for the background-subtraction engine.
//!
//! Subcommands: `synth` (generate synthetic sequences), `run` (process a
//! dataset and write masks plus a report), `eval` (score existing masks
//! against ground truth), `sweep` (F1 versus semantic frame rate, CSV),
//! and `optimize` (threshold search). Exit codes: 0 on success, 1 on
//! configuration errors, 2 on data errors.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use rtsbs_core::config::{FusionMode, PipelineConfig};
use rtsbs_core::error::{Error, Result};
use rtsbs_core::semantic::Schedule;

#[derive(Parser)]
#[command(name = "rtsbs", version, about = "Real-time semantic background subtraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic sequences with ground truth and semantic maps.
    Synth(SynthArgs),
    /// Run a pipeline over a dataset, writing masks and a score report.
    Run(RunArgs),
    /// Score previously written masks against ground truth.
    Eval(EvalArgs),
    /// Sweep fusion modes over semantic frame rates and emit a CSV.
    Sweep(SweepArgs),
    /// Search the four decision thresholds for the best overall F1.
    Optimize(OptimizeArgs),
}

/// Flags mirroring the pipeline configuration keys. Precedence: defaults,
/// then `--config`, then explicit flags.
#[derive(Args, Clone)]
struct PipelineFlags {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Semantic background threshold (config key tau_bg).
    #[arg(long)]
    tau_bg: Option<f32>,
    /// Semantic foreground increment threshold (config key tau_fg).
    #[arg(long)]
    tau_fg: Option<f32>,
    /// Change threshold for cached-background pixels (tau_star_bg).
    #[arg(long)]
    tau_star_bg: Option<i32>,
    /// Change threshold for cached-foreground pixels (tau_star_fg).
    #[arg(long)]
    tau_star_fg: Option<i32>,
    /// Semantic frame rate: maps arrive one in every X frames.
    #[arg(long, short = 'x')]
    x: Option<u32>,
    /// Drive the conservative model updates with the fused output.
    #[arg(long)]
    feedback: bool,
    /// Seed for every stochastic component.
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per pixel in the background model (config key N).
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// Color match radius (config key R).
    #[arg(long, value_name = "R")]
    radius: Option<u32>,
    /// Matches required to call a pixel background.
    #[arg(long)]
    min_matches: Option<usize>,
    /// Update subsampling factor (config key phi).
    #[arg(long)]
    phi: Option<u32>,
    /// Apply a 3x3 majority filter to output masks.
    #[arg(long)]
    post_filter: bool,
    /// Read per-pixel availability masks (avail%06d.pgm) from each
    /// sequence's availability/ directory instead of a frame schedule.
    #[arg(long)]
    per_pixel_availability: bool,
}

impl PipelineFlags {
    fn build(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.tau_bg {
            config.semantic.tau_bg = v;
        }
        if let Some(v) = self.tau_fg {
            config.semantic.tau_fg = v;
        }
        if let Some(v) = self.tau_star_bg {
            config.change.tau_star_bg = v;
        }
        if let Some(v) = self.tau_star_fg {
            config.change.tau_star_fg = v;
        }
        if let Some(x) = self.x {
            config.schedule = Schedule::every_kth(x)?;
        }
        if self.per_pixel_availability {
            config.schedule = Schedule::Explicit;
        }
        if self.feedback {
            config.feedback = true;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.samples {
            config.vibe.num_samples = v;
        }
        if let Some(v) = self.radius {
            config.vibe.match_radius = v;
        }
        if let Some(v) = self.min_matches {
            config.vibe.min_matches = v;
        }
        if let Some(v) = self.phi {
            config.vibe.subsample_factor = v;
        }
        if self.post_filter {
            config.post_filter = true;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Parses a mode token; `rtsbs-fb` selects the cached-semantics mode with
/// feedback forced on.
fn parse_mode(token: &str, config: &mut PipelineConfig) -> Result<FusionMode> {
    if token == "rtsbs-fb" {
        config.feedback = true;
        return Ok(FusionMode::RtSbs);
    }
    token.parse()
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (one sequence, or seqNN/ subdirectories).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 320)]
    width: usize,
    #[arg(long, default_value_t = 240)]
    height: usize,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    /// Number of moving rectangles.
    #[arg(long, default_value_t = 2)]
    objects: usize,
    #[arg(long, default_value_t = 8.0)]
    noise_sigma: f64,
    /// Confidence of the semantic oracle, in [0, 1].
    #[arg(long, default_value_t = 0.9)]
    fidelity: f64,
    /// Drifting-gradient background instead of a solid one.
    #[arg(long)]
    gradient: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of sequences to generate (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    sequences: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset root: a sequence directory or a tree of them.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for masks and report.csv.
    #[arg(long)]
    out: PathBuf,
    /// Fusion mode: vibe, sbs, rtsbs, rtsbs-fb, never, always.
    #[arg(long, default_value = "rtsbs")]
    mode: String,
    /// Skip writing mask files (still reports scores).
    #[arg(long)]
    no_masks: bool,
    /// Process up to this many videos concurrently.
    #[arg(long, default_value_t = 1, value_name = "K")]
    parallel_videos: usize,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset root holding the ground truth.
    #[arg(long)]
    data: PathBuf,
    /// Directory of masks written by `run`.
    #[arg(long)]
    masks: PathBuf,
    /// Report CSV path (defaults to <masks>/report.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Dataset root with ground truth and semantic maps.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated mode tokens.
    #[arg(long, default_value = "vibe,sbs,rtsbs,rtsbs-fb,never,always")]
    modes: String,
    /// Comma-separated semantic frame rates.
    #[arg(long, default_value = "1,2,5,10,25", value_name = "LIST")]
    x_values: String,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Dataset root with ground truth and semantic maps.
    #[arg(long)]
    data: PathBuf,
    /// Directory for trial logs and best-configuration files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Fusion mode under optimization.
    #[arg(long, default_value = "rtsbs")]
    mode: String,
    /// Random-search trials (the defaults are always trial 0).
    #[arg(long, default_value_t = 32)]
    budget: u32,
    /// Offset magnitudes probed per axis during refinement.
    #[arg(long, default_value_t = 4)]
    refine_steps: u32,
    /// Refinement rounds over the four axes.
    #[arg(long, default_value_t = 2)]
    refine_rounds: u32,
    /// Also search per-video parameters seeded with the global best.
    #[arg(long)]
    scene_specific: bool,
    /// Seed for the search itself (the pipeline seed comes from the
    /// pipeline flags).
    #[arg(long, default_value_t = 7)]
    search_seed: u64,
    #[command(flatten)]
    pipeline: PipelineFlags,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => commands::synth(args),
        Command::Run(args) => commands::run(args),
        Command::Eval(args) => commands::eval(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Optimize(args) => commands::optimize(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

pub(crate) use {EvalArgs as EvalOpts, OptimizeArgs as OptimizeOpts, RunArgs as RunOpts,
    SweepArgs as SweepOpts, SynthArgs as SynthOpts};

pub(crate) fn mode_of(token: &str, config: &mut PipelineConfig) -> Result<FusionMode> {
    parse_mode(token, config)
}

pub(crate) fn config_error(message: impl Into<String>) -> Error {
    Error::Config(message.into())
}
