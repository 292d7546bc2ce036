use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use treecut_core::eval::CoveringDirection;
use treecut_core::Metric;

use crate::args::{Cli, Command, GridList, LikelihoodKind, ModelArgs, SegmentMode};
use crate::error::{CliError, CliResult};

/// Every setting a command reads. Written next to the outputs as
/// `<command>.config.json` and accepted back through `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,

    pub image: Option<PathBuf>,
    pub tree: Option<PathBuf>,
    pub superpixels: Option<String>,
    pub import: Option<PathBuf>,

    pub p: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub mode: SegmentMode,
    pub k: Option<f64>,
    pub likelihood: LikelihoodKind,
    pub ground_truth: Option<PathBuf>,
    pub samples: usize,

    pub segmentation: Option<PathBuf>,
    pub annotations: Vec<PathBuf>,
    pub id: Option<String>,
    pub manifest: Option<PathBuf>,
    pub metric: Metric,
    pub covering_direction: CoveringDirection,

    pub p_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub k_grid: Option<Vec<f64>>,
    pub fixed_lambda: Option<f64>,
    pub scale_split: bool,
    pub baseline: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: 0,
            jobs: None,
            out_dir: PathBuf::from("."),
            image: None,
            tree: None,
            superpixels: None,
            import: None,
            p: 0.99,
            lambda: 2e-4,
            epsilon: 1e-6,
            mode: SegmentMode::Map,
            k: None,
            likelihood: LikelihoodKind::Gaussian,
            ground_truth: None,
            samples: 10,
            segmentation: None,
            annotations: Vec::new(),
            id: None,
            manifest: None,
            metric: Metric::Covering,
            covering_direction: CoveringDirection::default(),
            p_grid: None,
            lambda_grid: None,
            k_grid: None,
            fixed_lambda: None,
            scale_split: false,
            baseline: false,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn set_grid(slot: &mut Option<Vec<f64>>, value: Option<GridList>) {
    if let Some(GridList(v)) = value {
        *slot = v;
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    /// Config file (if any) overlaid with command-line flags.
    pub fn resolve(cli: Cli) -> CliResult<(Self, Command)> {
        let mut cfg = match &cli.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        let name = cli.command.name();
        match &cfg.command {
            Some(c) if c != name => {
                return Err(CliError::usage(format!(
                    "config is for command {c:?}, not {name:?}"
                )))
            }
            _ => cfg.command = Some(name.to_owned()),
        }
        set(&mut cfg.seed, cli.seed);
        set_opt(&mut cfg.jobs, cli.jobs);
        set(&mut cfg.out_dir, cli.out_dir);

        match &cli.command {
            Command::Tree(a) => {
                set_opt(&mut cfg.image, a.image.clone());
                set_opt(&mut cfg.superpixels, a.superpixels.clone());
                set_opt(&mut cfg.import, a.import.clone());
            }
            Command::Segment(a) => {
                cfg.apply_model(&a.model);
                set(&mut cfg.mode, a.mode);
                set_opt(&mut cfg.k, a.k);
            }
            Command::Sample(a) => {
                cfg.apply_model(&a.model);
                set(&mut cfg.samples, a.samples);
            }
            Command::Eval(a) => {
                set_opt(&mut cfg.segmentation, a.segmentation.clone());
                if !a.annotations.is_empty() {
                    cfg.annotations = a.annotations.clone();
                }
                set_opt(&mut cfg.id, a.id.clone());
                set_opt(&mut cfg.manifest, a.manifest.clone());
                set(&mut cfg.metric, a.metric);
                set(&mut cfg.covering_direction, a.covering_direction.map(Into::into));
            }
            Command::Tune(a) => {
                set_opt(&mut cfg.manifest, a.manifest.clone());
                set_grid(&mut cfg.p_grid, a.p_grid.clone());
                set_grid(&mut cfg.lambda_grid, a.lambda_grid.clone());
                set_grid(&mut cfg.k_grid, a.k_grid.clone());
                set_opt(&mut cfg.fixed_lambda, a.fixed_lambda);
                set(&mut cfg.metric, a.metric);
                set(&mut cfg.epsilon, a.epsilon);
                cfg.scale_split |= a.scale_split;
                cfg.baseline |= a.baseline;
            }
        }
        if cfg.jobs == Some(0) {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        Ok((cfg, cli.command))
    }

    fn apply_model(&mut self, m: &ModelArgs) {
        set_opt(&mut self.image, m.image.clone());
        set_opt(&mut self.tree, m.tree.clone());
        set_opt(&mut self.superpixels, m.superpixels.clone());
        set(&mut self.p, m.p);
        set(&mut self.lambda, m.lambda);
        set(&mut self.epsilon, m.epsilon);
        set(&mut self.likelihood, m.likelihood);
        set_opt(&mut self.ground_truth, m.ground_truth.clone());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn require<'a, T>(value: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| CliError::usage(format!("missing required --{flag}")))
    }
}
