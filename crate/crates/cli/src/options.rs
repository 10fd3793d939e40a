use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use msraft::pipeline::IterationSchedule;

#[derive(Debug, Parser)]
#[command(name = "msraft", version, about = "Coarse-to-fine optical flow toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate flow for every consecutive pair of frames.
    Estimate(EstimateArgs),
    /// Compare a flow with ground truth, or compute an improvement percentage.
    Eval(EvalArgs),
    /// Check on-demand against precomputed correlation lookups.
    CheckCorr(CheckCorrArgs),
    /// List seeded draws from a dataset mixture.
    MixPlan(MixPlanArgs),
    /// Forward-warp a flow field onto the next frame.
    Warp(WarpArgs),
    /// Render a flow field with the standard color wheel.
    Viz(VizArgs),
}

/// `train`, `infer`, or a comma-separated list of per-scale counts.
pub fn parse_schedule(s: &str) -> Result<IterationSchedule, String> {
    match s {
        "train" => Ok(IterationSchedule::training()),
        "infer" => Ok(IterationSchedule::inference()),
        custom => {
            let counts = custom
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| format!("expected train, infer or a list like 4,6,5,10; got {custom:?}"))?;
            IterationSchedule::new(counts).map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Two or more frames of equal size (PNG or PNM).
    #[arg(required = true, num_args = 2..)]
    pub frames: Vec<PathBuf>,
    /// Output .flo file for a single pair, or a directory for a sequence.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value = "infer", value_parser = parse_schedule)]
    pub schedule: IterationSchedule,
    /// Lookup radius in pixels.
    #[arg(long, default_value_t = 4)]
    pub radius: usize,
    /// Correlation pyramid levels per scale.
    #[arg(long, default_value_t = 4, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub levels: usize,
    /// Initialise each pair from the previous pair's zero-initialised flow.
    #[arg(long)]
    pub warm_start: bool,
    /// Also write a color rendering (.ppm) next to each flow.
    #[arg(long)]
    pub viz: bool,
    /// Also write each pair's full-resolution initialisation (.init.flo).
    #[arg(long)]
    pub save_init: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Estimated flow (.flo or KITTI .png).
    pub flow: Option<PathBuf>,
    /// Ground truth (.flo or KITTI .png); its validity channel selects pixels.
    pub gt: Option<PathBuf>,
    /// Ground truth whose validity marks non-occluded pixels.
    #[arg(long)]
    pub noc: Option<PathBuf>,
    /// Print 100·(OLD − NEW)/OLD to one decimal.
    #[arg(long, num_args = 2, value_names = ["OLD", "NEW"], allow_negative_numbers = true)]
    pub improve: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CheckCorrArgs {
    #[arg(long, default_value_t = 16)]
    pub height: usize,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long, default_value_t = 4)]
    pub radius: usize,
    /// Number of random instances, seeded `seed, seed+1, …`.
    #[arg(long, default_value_t = 1)]
    pub instances: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bound on flow components of the random instances.
    #[arg(long, default_value_t = 6.0)]
    pub max_flow: f64,
    /// Use the same features for both frames and zero flow.
    #[arg(long)]
    pub identical: bool,
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    /// Test hook: corrupt one on-demand cost by this amount.
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub perturb: f64,
}

#[derive(Debug, Args)]
pub struct MixPlanArgs {
    /// Mixture as name=p,name=p,… (default: the fine-tuning mixture).
    #[arg(long)]
    pub spec: Option<String>,
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Norm shown at full saturation (default: the field's largest vector).
    #[arg(long)]
    pub max_norm: Option<f64>,
}
