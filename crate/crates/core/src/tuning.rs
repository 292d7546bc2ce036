//! Grid-search fitting of the global activation probability `p` and the
//! likelihood scale `λ`, the UCM-threshold baseline sweep, and the
//! coarse/medium/fine scale protocol.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate, AnnotationSet, Metric, MetricReport};
use crate::image::{Image, SuperpixelMap};
use crate::likelihood::{region_loglik_table, LikelihoodConfig};
use crate::model::{cut_to_segmentation, CutConfig, ModelParams, PosteriorTables};
use crate::tree::{threshold_tree, NodeId, RegionTree};

/// Parameter values to sweep. Each list is strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub p_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_values: Option<Vec<f64>>,
}

impl ParamGrid {
    pub fn new(p_values: Vec<f64>, lambda_values: Vec<f64>, k_values: Option<Vec<f64>>) -> Result<Self> {
        Self {
            p_values,
            lambda_values,
            k_values,
        }
        .validated()
    }

    /// 100 `p` values, 10 `λ` values and 100 `k` values; see
    /// [`default_p_values`](Self::default_p_values) and friends.
    pub fn standard() -> Self {
        Self {
            p_values: Self::default_p_values(),
            lambda_values: Self::default_lambda_values(),
            k_values: Some(Self::default_k_values()),
        }
    }

    /// `p = 1 - 10^(-u)` for 100 equally spaced `u`, running from
    /// `p = 0.0001` to `p = 0.9999`, so grid points crowd towards 1.
    pub fn default_p_values() -> Vec<f64> {
        let lo = -(0.9999f64).log10();
        let hi = 4.0;
        (0..100)
            .map(|i| 1.0 - 10f64.powf(-(lo + (hi - lo) * i as f64 / 99.0)))
            .collect()
    }

    /// `λ = 0.0001, 0.0002, …, 0.001`.
    pub fn default_lambda_values() -> Vec<f64> {
        (1..=10).map(|i| i as f64 * 1e-4).collect()
    }

    /// `k = 0.01, 0.02, …, 1.00`.
    pub fn default_k_values() -> Vec<f64> {
        (1..=100).map(|i| i as f64 / 100.0).collect()
    }

    /// Same grid with `λ` pinned to one value.
    pub fn with_fixed_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda_values = vec![lambda];
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        check_increasing("p", &self.p_values, |p| p > 0.0 && p < 1.0, "(0, 1)")?;
        check_increasing(
            "lambda",
            &self.lambda_values,
            |l| l > 0.0 && l.is_finite(),
            "(0, inf)",
        )?;
        if let Some(k) = &self.k_values {
            check_increasing("k", k, |k| k > 0.0 && k <= 1.0, "(0, 1]")?;
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.p_values.len() * self.lambda_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_increasing(name: &str, values: &[f64], in_range: impl Fn(f64) -> bool, range: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{name} grid is empty")));
    }
    if let Some(v) = values.iter().find(|&&v| !in_range(v)) {
        return Err(Error::invalid(format!("{name} value {v} outside {range}")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("{name} grid is not strictly increasing")));
    }
    Ok(())
}

/// One training image: a tree over its superpixels, the human annotations
/// and the Gaussian log-likelihood table at `λ = 1`.
#[derive(Debug, Clone)]
pub struct TuningImage {
    pub id: String,
    pub tree: RegionTree,
    pub superpixels: SuperpixelMap,
    pub annotations: AnnotationSet,
    base_logliks: Vec<f64>,
}

impl TuningImage {
    pub fn new(
        image: &Image,
        tree: RegionTree,
        superpixels: SuperpixelMap,
        annotations: AnnotationSet,
        epsilon: f64,
    ) -> Result<Self> {
        let cfg = LikelihoodConfig::gaussian(1.0, epsilon)?;
        let base = region_loglik_table(&tree, image, &superpixels, None, &cfg)?;
        Self::from_table(tree, superpixels, annotations, base)
    }

    /// Uses a precomputed `λ = 1` table.
    pub fn from_table(
        tree: RegionTree,
        superpixels: SuperpixelMap,
        annotations: AnnotationSet,
        base_logliks: Vec<f64>,
    ) -> Result<Self> {
        if base_logliks.len() != tree.len() {
            return Err(Error::invalid(format!(
                "{} log-likelihoods for {} nodes",
                base_logliks.len(),
                tree.len()
            )));
        }
        if superpixels.count() != tree.num_superpixels() {
            return Err(Error::invalid("tree leaves do not match the superpixels"));
        }
        let gt = &annotations.segmentations()[0];
        if gt.width() != superpixels.width() || gt.height() != superpixels.height() {
            return Err(Error::invalid(format!(
                "annotations of {} do not match the image size",
                annotations.image_id()
            )));
        }
        Ok(Self {
            id: annotations.image_id().to_owned(),
            tree,
            superpixels,
            annotations,
            base_logliks,
        })
    }

    pub fn base_logliks(&self) -> &[f64] {
        &self.base_logliks
    }

    /// MAP cut at `(p, λ)`.
    pub fn map_cut(&self, p: f64, lambda: f64) -> Result<CutConfig> {
        let params = ModelParams::global(&self.tree, p)?;
        let table: Vec<f64> = self.base_logliks.iter().map(|v| lambda * v).collect();
        let tables = PosteriorTables::compute(&self.tree, &params, &table)?;
        Ok(tables.map_cut(&self.tree).0)
    }

    pub fn evaluate_cut(&self, cut: &CutConfig) -> Result<MetricReport> {
        let seg = cut_to_segmentation(cut, &self.tree, &self.superpixels)?;
        evaluate(&seg, &self.annotations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub p: f64,
    pub lambda: f64,
    /// Dataset mean of the selected metric.
    pub score: f64,
    /// One report per training image, in input order.
    pub reports: Vec<MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_p: f64,
    pub best_lambda: f64,
    pub score: f64,
    pub metric: Metric,
    /// Every grid point, `p`-major.
    pub evaluations: Vec<GridPoint>,
}

impl GridSearchResult {
    /// `{ "best_p": …, "best_lambda": …, "score": … }`.
    pub fn summary_json(&self) -> String {
        let summary = serde_json::json!({
            "best_p": self.best_p,
            "best_lambda": self.best_lambda,
            "score": self.score,
        });
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        text.push('\n');
        text
    }

    /// Rows `image_id,p,lambda,covering,pri,vi` for every image and point.
    pub fn to_csv(&self, images: &[TuningImage]) -> String {
        let mut out = String::from("image_id,p,lambda,covering,pri,vi\n");
        for point in &self.evaluations {
            for (image, r) in images.iter().zip(&point.reports) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    csv_field(&image.id),
                    point.p,
                    point.lambda,
                    r.covering,
                    r.pri,
                    r.vi
                );
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Dataset mean of `metric` over per-image reports.
fn dataset_score(reports: &[MetricReport], metric: Metric) -> f64 {
    reports.iter().map(|r| metric.select(r)).sum::<f64>() / reports.len() as f64
}

/// Evaluates the MAP segmentation of every image at one `(p, λ)`.
pub fn evaluate_point(train: &[TuningImage], p: f64, lambda: f64, metric: Metric) -> Result<GridPoint> {
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let reports = train
        .par_iter()
        .map(|img| img.evaluate_cut(&img.map_cut(p, lambda)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridPoint {
        p,
        lambda,
        score: dataset_score(&reports, metric),
        reports,
    })
}

/// Exhaustive search over `grid.p_values × grid.lambda_values` for the
/// pair whose MAP segmentations have the best dataset-mean `metric`. Equal
/// scores go to the larger `p`, then the larger `λ`.
///
/// Images are processed in parallel; each keeps a cache of reports keyed by
/// cut, since neighbouring grid points often share their MAP cut. Scores
/// are reduced in input order, so results do not depend on scheduling.
pub fn grid_search(train: &[TuningImage], grid: &ParamGrid, metric: Metric) -> Result<GridSearchResult> {
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let grid = grid.clone().validated()?;
    let points: Vec<(f64, f64)> = grid
        .p_values
        .iter()
        .flat_map(|&p| grid.lambda_values.iter().map(move |&l| (p, l)))
        .collect();
    // [image][point]
    let per_image = train
        .par_iter()
        .map(|img| {
            let mut cache: HashMap<Vec<NodeId>, MetricReport> = HashMap::new();
            points
                .iter()
                .map(|&(p, lambda)| {
                    let cut = img.map_cut(p, lambda)?;
                    if let Some(r) = cache.get(cut.active()) {
                        return Ok(*r);
                    }
                    let r = img.evaluate_cut(&cut)?;
                    cache.insert(cut.active().to_vec(), r);
                    Ok(r)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut evaluations: Vec<GridPoint> = Vec::with_capacity(points.len());
    let mut best: Option<usize> = None;
    for (j, &(p, lambda)) in points.iter().enumerate() {
        let reports: Vec<MetricReport> = per_image.iter().map(|row| row[j]).collect();
        let score = dataset_score(&reports, metric);
        // points are in increasing (p, λ) order, so ties move the choice up
        if best.is_none_or(|b| !metric.better(evaluations[b].score, score)) {
            best = Some(j);
        }
        evaluations.push(GridPoint {
            p,
            lambda,
            score,
            reports,
        });
    }
    let best = &evaluations[best.expect("grid is non-empty")];
    Ok(GridSearchResult {
        best_p: best.p,
        best_lambda: best.lambda,
        score: best.score,
        metric,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub k: f64,
    pub score: f64,
    pub reports: Vec<MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearchResult {
    pub best_k: f64,
    pub score: f64,
    pub metric: Metric,
    pub evaluations: Vec<ThresholdPoint>,
}

/// Sweeps the UCM threshold `k` over trees carrying weights; equal scores
/// go to the larger `k`.
pub fn grid_search_threshold(
    train: &[TuningImage],
    k_values: &[f64],
    metric: Metric,
) -> Result<ThresholdSearchResult> {
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    check_increasing("k", k_values, |k| k > 0.0 && k <= 1.0, "(0, 1]")?;
    let per_image = train
        .par_iter()
        .map(|img| {
            k_values
                .iter()
                .map(|&k| img.evaluate_cut(&threshold_tree(&img.tree, k)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut evaluations: Vec<ThresholdPoint> = Vec::with_capacity(k_values.len());
    let mut best = 0;
    for (j, &k) in k_values.iter().enumerate() {
        let reports: Vec<MetricReport> = per_image.iter().map(|row| row[j]).collect();
        let score = dataset_score(&reports, metric);
        if j == 0 || !metric.better(evaluations[best].score, score) {
            best = j;
        }
        evaluations.push(ThresholdPoint { k, score, reports });
    }
    Ok(ThresholdSearchResult {
        best_k: evaluations[best].k,
        score: evaluations[best].score,
        metric,
        evaluations,
    })
}

/// Segment-count buckets: coarse 1–8, medium 9–31, fine 32 and above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Coarse,
    Medium,
    Fine,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::Coarse, Scale::Medium, Scale::Fine];

    pub fn of_segment_count(n: usize) -> Self {
        match n {
            0..=8 => Scale::Coarse,
            9..=31 => Scale::Medium,
            _ => Scale::Fine,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scale::Coarse => "coarse",
            Scale::Medium => "medium",
            Scale::Fine => "fine",
        }
    }
}

/// Image ids per scale bucket, in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSplit {
    pub coarse: Vec<String>,
    pub medium: Vec<String>,
    pub fine: Vec<String>,
}

impl ScaleSplit {
    pub fn get(&self, scale: Scale) -> &[String] {
        match scale {
            Scale::Coarse => &self.coarse,
            Scale::Medium => &self.medium,
            Scale::Fine => &self.fine,
        }
    }

    /// Every id, coarse bucket first.
    pub fn all(&self) -> Vec<String> {
        Scale::ALL
            .iter()
            .flat_map(|&s| self.get(s).iter().cloned())
            .collect()
    }
}

/// Segment count of an annotated image: the median over annotators, the
/// lower middle value when the count is even.
pub fn segment_count(annotations: &AnnotationSet) -> usize {
    let mut counts: Vec<usize> = annotations
        .segmentations()
        .iter()
        .map(|s| s.num_regions())
        .collect();
    counts.sort_unstable();
    counts[(counts.len() - 1) / 2]
}

pub fn scale_split(annotations: &[AnnotationSet]) -> ScaleSplit {
    let mut split = ScaleSplit::default();
    for a in annotations {
        let bucket = match Scale::of_segment_count(segment_count(a)) {
            Scale::Coarse => &mut split.coarse,
            Scale::Medium => &mut split.medium,
            Scale::Fine => &mut split.fine,
        };
        bucket.push(a.image_id().to_owned());
    }
    split
}

/// Training subset of a cross-scale row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainSet {
    Coarse,
    Medium,
    Fine,
    All,
}

impl TrainSet {
    pub const ALL: [TrainSet; 4] = [TrainSet::Coarse, TrainSet::Medium, TrainSet::Fine, TrainSet::All];

    pub fn name(self) -> &'static str {
        match self {
            TrainSet::Coarse => "coarse",
            TrainSet::Medium => "medium",
            TrainSet::Fine => "fine",
            TrainSet::All => "all",
        }
    }

    fn ids(self, split: &ScaleSplit) -> Vec<String> {
        match self {
            TrainSet::Coarse => split.coarse.clone(),
            TrainSet::Medium => split.medium.clone(),
            TrainSet::Fine => split.fine.clone(),
            TrainSet::All => split.all(),
        }
    }
}

impl From<Scale> for TrainSet {
    fn from(s: Scale) -> Self {
        match s {
            Scale::Coarse => TrainSet::Coarse,
            Scale::Medium => TrainSet::Medium,
            Scale::Fine => TrainSet::Fine,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossScaleRow<M> {
    pub train: TrainSet,
    /// `None` when the training subset is empty and the row was skipped.
    pub model: Option<M>,
    /// Test scores on the coarse, medium and fine subsets; `None` for a
    /// skipped row or an empty test subset.
    pub scores: [Option<f64>; 3],
}

/// Rows trained on coarse, medium, fine and all images; columns tested on
/// coarse, medium and fine.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossScaleMatrix<M> {
    pub rows: Vec<CrossScaleRow<M>>,
}

/// Marker written in place of a skipped cell.
pub const SKIPPED: &str = "skipped";

impl<M> CrossScaleMatrix<M> {
    pub fn row(&self, train: TrainSet) -> &CrossScaleRow<M> {
        &self.rows[train as usize]
    }

    pub fn score(&self, train: TrainSet, test: Scale) -> Option<f64> {
        self.row(train).scores[test as usize]
    }

    /// `train,coarse,medium,fine`, with [`SKIPPED`] for missing cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("train,coarse,medium,fine\n");
        for row in &self.rows {
            out.push_str(row.train.name());
            for s in row.scores {
                out.push(',');
                match s {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push_str(SKIPPED),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Trains on each row's subset with `train_fn` and scores every non-empty
/// test bucket with `eval_fn`. Rows whose training subset is empty are
/// skipped rather than failing.
pub fn cross_scale_matrix<M>(
    split: &ScaleSplit,
    mut train_fn: impl FnMut(&[String]) -> Result<M>,
    mut eval_fn: impl FnMut(&M, &[String]) -> Result<f64>,
) -> Result<CrossScaleMatrix<M>> {
    let mut rows = Vec::with_capacity(4);
    for train in TrainSet::ALL {
        let ids = train.ids(split);
        if ids.is_empty() {
            rows.push(CrossScaleRow {
                train,
                model: None,
                scores: [None; 3],
            });
            continue;
        }
        let model = train_fn(&ids)?;
        let mut scores = [None; 3];
        for scale in Scale::ALL {
            let test = split.get(scale);
            if !test.is_empty() {
                scores[scale as usize] = Some(eval_fn(&model, test)?);
            }
        }
        rows.push(CrossScaleRow {
            train,
            model: Some(model),
            scores,
        });
    }
    Ok(CrossScaleMatrix { rows })
}

/// [`cross_scale_matrix`] with [`grid_search`] as the trainer and the
/// dataset-mean `metric` at the trained `(p, λ)` as the test score.
pub fn cross_scale_grid_search(
    images: &[TuningImage],
    split: &ScaleSplit,
    grid: &ParamGrid,
    metric: Metric,
) -> Result<CrossScaleMatrix<GridSearchResult>> {
    let mut by_id: HashMap<&str, &TuningImage> = HashMap::new();
    for img in images {
        if by_id.insert(img.id.as_str(), img).is_some() {
            return Err(Error::invalid(format!("duplicate image id {:?}", img.id)));
        }
    }
    let subset = |ids: &[String]| -> Result<Vec<TuningImage>> {
        ids.iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|&img| img.clone())
                    .ok_or_else(|| Error::invalid(format!("unknown image id {id:?}")))
            })
            .collect()
    };
    cross_scale_matrix(
        split,
        |ids| grid_search(&subset(ids)?, grid, metric),
        |model, ids| Ok(evaluate_point(&subset(ids)?, model.best_p, model.best_lambda, metric)?.score),
    )
}
