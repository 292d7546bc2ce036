//! Region log-likelihoods from aggregated sufficient statistics.
//!
//! Two models are provided: independent-pixel Gaussian with maximum
//! likelihood mean and covariance, and a ground-truth label model scored by
//! the region's label entropy. Both are scaled by `lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Segmentation;
use crate::image::{Image, SuperpixelMap};
use crate::tree::RegionTree;

const DIM: usize = 3;

/// Pixel count, channel sums and summed outer products `y yᵀ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RegionStats {
    pub n: u64,
    pub sum: [f64; DIM],
    pub outer_sum: [[f64; DIM]; DIM],
}

impl RegionStats {
    pub fn from_pixel(y: [f64; DIM]) -> Self {
        let mut s = Self::default();
        s.push(y);
        s
    }

    pub fn from_pixels<'a>(pixels: impl IntoIterator<Item = &'a [f64; DIM]>) -> Self {
        let mut s = Self::default();
        for &y in pixels {
            s.push(y);
        }
        s
    }

    pub fn push(&mut self, y: [f64; DIM]) {
        self.n += 1;
        for i in 0..DIM {
            self.sum[i] += y[i];
            for j in 0..DIM {
                self.outer_sum[i][j] += y[i] * y[j];
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        for i in 0..DIM {
            self.sum[i] += other.sum[i];
            for j in 0..DIM {
                self.outer_sum[i][j] += other.outer_sum[i][j];
            }
        }
    }

    pub fn mean(&self) -> [f64; DIM] {
        let n = self.n as f64;
        self.sum.map(|s| s / n)
    }

    /// Symmetrized maximum-likelihood covariance `outer_sum/n - μ μᵀ`.
    pub fn covariance(&self) -> [[f64; DIM]; DIM] {
        let n = self.n as f64;
        let mu = self.mean();
        let mut cov = [[0.0; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                cov[i][j] = self.outer_sum[i][j] / n - mu[i] * mu[j];
            }
        }
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                let m = 0.5 * (cov[i][j] + cov[j][i]);
                cov[i][j] = m;
                cov[j][i] = m;
            }
        }
        cov
    }
}

/// Componentwise sum of child statistics.
pub fn aggregate_stats(children: &[RegionStats]) -> Result<RegionStats> {
    if children.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty list of stats"));
    }
    let mut total = RegionStats::default();
    for c in children {
        total.merge(c);
    }
    Ok(total)
}

/// Per-label pixel counts within a region.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub counts: Vec<u64>,
}

impl LabelCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &Self) {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodMode {
    #[default]
    Gaussian,
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodConfig {
    pub lambda: f64,
    /// Ridge added to the covariance diagonal, in variance units.
    pub epsilon: f64,
    pub mode: LikelihoodMode,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            epsilon: 1e-6,
            mode: LikelihoodMode::Gaussian,
        }
    }
}

impl LikelihoodConfig {
    pub fn gaussian(lambda: f64, epsilon: f64) -> Result<Self> {
        Self {
            lambda,
            epsilon,
            mode: LikelihoodMode::Gaussian,
        }
        .validated()
    }

    pub fn ground_truth(lambda: f64) -> Result<Self> {
        Self {
            lambda,
            epsilon: 0.0,
            mode: LikelihoodMode::GroundTruth,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda {} must be positive", self.lambda)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon {} must be non-negative",
                self.epsilon
            )));
        }
        Ok(self)
    }
}

/// `λ · -(N/2) [D ln 2π + ln|Σ̂ + εI| + D]`.
pub fn gaussian_loglik(stats: &RegionStats, cfg: &LikelihoodConfig) -> Result<f64> {
    if stats.n == 0 {
        return Err(Error::invalid("region has no pixels"));
    }
    let mut cov = stats.covariance();
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] += cfg.epsilon;
    }
    let log_det = cholesky_log_det(&cov).ok_or_else(|| {
        Error::Evaluation(format!(
            "covariance of a {}-pixel region is not positive definite (epsilon = {})",
            stats.n, cfg.epsilon
        ))
    })?;
    let d = DIM as f64;
    let n = stats.n as f64;
    let loglik = -0.5 * n * (d * (2.0 * std::f64::consts::PI).ln() + log_det + d);
    Ok(cfg.lambda * loglik)
}

/// `ln|A|` for a symmetric 3×3 matrix via Cholesky, `None` unless positive definite.
fn cholesky_log_det(a: &[[f64; DIM]; DIM]) -> Option<f64> {
    let mut l = [[0.0; DIM]; DIM];
    let mut log_det = 0.0;
    for j in 0..DIM {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= l[j][k] * l[j][k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[j][j] = ljj;
        log_det += 2.0 * ljj.ln();
        for i in (j + 1)..DIM {
            let mut v = a[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / ljj;
        }
    }
    Some(log_det)
}

/// `λ · n Σ_j π̂_j ln π̂_j` with `π̂_j = n_j / n` and `0 ln 0 = 0`.
pub fn gt_loglik(counts: &LabelCounts, cfg: &LikelihoodConfig) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::invalid("label counts are all zero"));
    }
    let n = total as f64;
    let sum: f64 = counts
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c * (c / n).ln()
        })
        .sum();
    Ok(cfg.lambda * sum)
}

/// Log-likelihood of every node's region, indexed by node id, in one
/// bottom-up pass. Ground-truth mode needs `gt`.
pub fn region_loglik_table(
    tree: &RegionTree,
    image: &Image,
    sp: &SuperpixelMap,
    gt: Option<&Segmentation>,
    cfg: &LikelihoodConfig,
) -> Result<Vec<f64>> {
    let cfg = cfg.validated()?;
    sp.check_matches(image)?;
    if sp.count() != tree.num_superpixels() {
        return Err(Error::invalid(format!(
            "tree has {} leaves but the superpixel map has {} superpixels",
            tree.num_superpixels(),
            sp.count()
        )));
    }
    match cfg.mode {
        LikelihoodMode::Gaussian => {
            let stats = node_stats(tree, image, sp);
            stats.iter().map(|s| gaussian_loglik(s, &cfg)).collect()
        }
        LikelihoodMode::GroundTruth => {
            let gt = gt.ok_or_else(|| {
                Error::invalid("ground-truth likelihood requires a ground-truth segmentation")
            })?;
            if gt.width() != sp.width() || gt.height() != sp.height() {
                return Err(Error::invalid("ground truth does not match the image size"));
            }
            let counts = node_label_counts(tree, sp, gt);
            counts.iter().map(|c| gt_loglik(c, &cfg)).collect()
        }
    }
}

/// Sufficient statistics of every node, indexed by node id.
pub fn node_stats(tree: &RegionTree, image: &Image, sp: &SuperpixelMap) -> Vec<RegionStats> {
    let mut per_sp = vec![RegionStats::default(); sp.count()];
    for (&l, &px) in sp.labels().iter().zip(image.pixels()) {
        per_sp[l as usize].push(px);
    }
    let mut stats = vec![RegionStats::default(); tree.len()];
    for &id in tree.postorder() {
        let node = tree.node(id);
        stats[id] = if node.is_leaf() {
            per_sp[node.superpixels[0] as usize]
        } else {
            let mut acc = RegionStats::default();
            for &c in &node.children {
                acc.merge(&stats[c]);
            }
            acc
        };
    }
    stats
}

fn node_label_counts(tree: &RegionTree, sp: &SuperpixelMap, gt: &Segmentation) -> Vec<LabelCounts> {
    let m = gt.num_regions();
    let mut per_sp = vec![LabelCounts::new(vec![0; m]); sp.count()];
    for (&l, &g) in sp.labels().iter().zip(gt.labels()) {
        per_sp[l as usize].counts[g as usize] += 1;
    }
    let mut counts = vec![LabelCounts::default(); tree.len()];
    for &id in tree.postorder() {
        let node = tree.node(id);
        counts[id] = if node.is_leaf() {
            per_sp[node.superpixels[0] as usize].clone()
        } else {
            let mut acc = LabelCounts::new(vec![0; m]);
            for &c in &node.children {
                acc.merge(&counts[c]);
            }
            acc
        };
    }
    counts
}
