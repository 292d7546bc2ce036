use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use treecut_core::eval::CoveringDirection;
use treecut_core::Metric;

#[derive(Debug, Parser)]
#[command(name = "treecut", version, about = "Probabilistic image segmentation by cutting region trees")]
pub struct Cli {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for content-adaptive superpixels and posterior sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Directory receiving every output file.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a region tree (or import one) and write it with its superpixels.
    Tree(TreeArgs),
    /// MAP or UCM-threshold segmentation with a median-color rendering.
    Segment(SegmentArgs),
    /// Seeded samples from the posterior over cuts.
    Sample(SampleArgs),
    /// Covering, PRI and VI against human annotations.
    Eval(EvalArgs),
    /// Grid search for p and lambda, optionally per segmentation scale.
    Tune(TuneArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tree(_) => "tree",
            Command::Segment(_) => "segment",
            Command::Sample(_) => "sample",
            Command::Eval(_) => "eval",
            Command::Tune(_) => "tune",
        }
    }
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    /// Input image (binary PPM).
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// `grid:CELL`, `slic:COUNT`, or a superpixel label map (PGM).
    #[arg(long, value_name = "SOURCE")]
    pub superpixels: Option<String>,
    /// Validate and re-export an existing JSON tree instead of building one.
    #[arg(long, value_name = "FILE")]
    pub import: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// JSON region tree.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Superpixel label map (PGM) matching the tree's leaves.
    #[arg(long)]
    pub superpixels: Option<String>,
    /// Global activation probability of internal nodes.
    #[arg(long)]
    pub p: Option<f64>,
    /// Likelihood scale.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Covariance ridge.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub likelihood: Option<LikelihoodKind>,
    /// Ground-truth label map for `--likelihood ground-truth`.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub mode: Option<SegmentMode>,
    /// UCM threshold for `--mode threshold`.
    #[arg(long)]
    pub k: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of samples.
    #[arg(short = 'n', long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Machine segmentation (PGM).
    #[arg(long)]
    pub segmentation: Option<PathBuf>,
    /// Human annotations of the same image (PGM).
    #[arg(long, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    /// Image id used in the report; defaults to the segmentation file stem.
    #[arg(long)]
    pub id: Option<String>,
    /// Parameter sweep manifest; enables ODS/OIS.
    #[arg(long, conflicts_with_all = ["segmentation", "annotations"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    #[arg(long, value_enum)]
    pub covering_direction: Option<DirectionArg>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Dataset manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// `default` or a comma-separated list.
    #[arg(long, value_parser = parse_grid)]
    pub p_grid: Option<GridList>,
    #[arg(long, value_parser = parse_grid)]
    pub lambda_grid: Option<GridList>,
    #[arg(long, value_parser = parse_grid)]
    pub k_grid: Option<GridList>,
    /// Pin lambda and search over p only.
    #[arg(long)]
    pub fixed_lambda: Option<f64>,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    /// Train and test per coarse/medium/fine bucket.
    #[arg(long)]
    pub scale_split: bool,
    /// Also sweep the UCM threshold baseline.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentMode {
    #[default]
    Map,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodKind {
    #[default]
    Gaussian,
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    /// Covering of each annotation by the segmentation.
    GroundTruthByMachine,
    /// Covering of the segmentation by each annotation.
    MachineByGroundTruth,
}

impl From<DirectionArg> for CoveringDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::GroundTruthByMachine => CoveringDirection::GroundTruthByMachine,
            DirectionArg::MachineByGroundTruth => CoveringDirection::MachineByGroundTruth,
        }
    }
}

/// A grid given on the command line: `None` selects the built-in default.
#[derive(Debug, Clone, PartialEq)]
pub struct GridList(pub Option<Vec<f64>>);

fn parse_grid(s: &str) -> Result<GridList, String> {
    if s.eq_ignore_ascii_case("default") {
        return Ok(GridList(None));
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(|v| GridList(Some(v)))
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: treecut_core::Error| e.to_string())
}
