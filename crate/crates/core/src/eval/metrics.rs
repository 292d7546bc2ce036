use serde::{Deserialize, Serialize};

use super::contingency::Contingency;
use super::{AnnotationSet, Segmentation};
use crate::error::Result;

/// `COV(S → S')`: pixel-weighted best IoU of each region of `s` against the
/// regions of `s_prime`. Not symmetric.
pub fn covering(s: &Segmentation, s_prime: &Segmentation) -> Result<f64> {
    let t = Contingency::new(s, s_prime)?;
    let mut best = vec![0.0f64; t.rows.len()];
    for &(r, c, n) in &t.cells {
        let union = t.rows[r as usize] + t.cols[c as usize] - n;
        let iou = n as f64 / union as f64;
        if iou > best[r as usize] {
            best[r as usize] = iou;
        }
    }
    let weighted: f64 = t
        .rows
        .iter()
        .zip(&best)
        .map(|(&size, &iou)| size as f64 * iou)
        .sum();
    Ok(weighted / t.total as f64)
}

/// Which way covering is measured against annotations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoveringDirection {
    /// `COV(gt → s)`: how well the machine segmentation covers each annotation.
    #[default]
    GroundTruthByMachine,
    /// `COV(s → gt)`.
    MachineByGroundTruth,
}

/// Mean covering over all annotations, measured as `COV(gt → s)` by default.
pub fn covering_vs_annotations(s: &Segmentation, gts: &AnnotationSet) -> Result<f64> {
    covering_vs_annotations_with(s, gts, CoveringDirection::default())
}

pub fn covering_vs_annotations_with(
    s: &Segmentation,
    gts: &AnnotationSet,
    direction: CoveringDirection,
) -> Result<f64> {
    mean_over(gts, |gt| match direction {
        CoveringDirection::GroundTruthByMachine => covering(gt, s),
        CoveringDirection::MachineByGroundTruth => covering(s, gt),
    })
}

/// Variation of information `H(S) + H(S') - 2 I(S; S')` in nats.
pub fn vi(s: &Segmentation, gt: &Segmentation) -> Result<f64> {
    let t = Contingency::new(s, gt)?;
    let n = t.total as f64;
    // H(S|S') + H(S'|S) summed cell by cell
    let value: f64 = t
        .cells
        .iter()
        .map(|&(r, c, count)| {
            let joint = count as f64;
            let a = t.rows[r as usize] as f64;
            let b = t.cols[c as usize] as f64;
            -(joint / n) * ((joint / a).ln() + (joint / b).ln())
        })
        .sum();
    Ok(value.max(0.0))
}

/// Mean VI over annotations.
pub fn vi_vs_annotations(s: &Segmentation, gts: &AnnotationSet) -> Result<f64> {
    mean_over(gts, |gt| vi(s, gt))
}

fn pairs(n: u64) -> u128 {
    let n = u128::from(n);
    n * n.saturating_sub(1) / 2
}

/// Rand index from pair counts in the contingency table.
pub fn rand_index(s: &Segmentation, gt: &Segmentation) -> Result<f64> {
    let t = Contingency::new(s, gt)?;
    let total = pairs(t.total);
    if total == 0 {
        return Ok(1.0);
    }
    let together_both: u128 = t.cells.iter().map(|c| pairs(c.2)).sum();
    let together_s: u128 = t.rows.iter().map(|&r| pairs(r)).sum();
    let together_gt: u128 = t.cols.iter().map(|&c| pairs(c)).sum();
    let apart_both = total + together_both - together_s - together_gt;
    Ok((together_both + apart_both) as f64 / total as f64)
}

/// Probabilistic Rand Index: mean Rand index over annotations.
pub fn pri(s: &Segmentation, gts: &AnnotationSet) -> Result<f64> {
    mean_over(gts, |gt| rand_index(s, gt))
}

fn mean_over(gts: &AnnotationSet, f: impl Fn(&Segmentation) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    for gt in gts.segmentations() {
        sum += f(gt)?;
    }
    Ok(sum / gts.len() as f64)
}

/// The three region metrics against one image's annotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub covering: f64,
    pub pri: f64,
    pub vi: f64,
}

pub fn evaluate(s: &Segmentation, gts: &AnnotationSet) -> Result<MetricReport> {
    Ok(MetricReport {
        covering: covering_vs_annotations(s, gts)?,
        pri: pri(s, gts)?,
        vi: vi_vs_annotations(s, gts)?,
    })
}
