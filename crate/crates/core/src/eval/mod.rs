//! Segmentation label maps and region-based quality metrics: covering,
//! Probabilistic Rand Index, Variation of Information, and the ODS/OIS
//! protocol.

mod contingency;
mod metrics;
mod protocol;

pub use metrics::{
    covering, covering_vs_annotations, covering_vs_annotations_with, evaluate, pri, rand_index, vi, vi_vs_annotations,
    CoveringDirection, MetricReport,
};
pub use protocol::{ods_ois_eval, write_metric_csv, Metric, OdsOis};

use std::path::Path;

use crate::error::{Error, Result};
use crate::pnm;

/// Per-pixel region labels, contiguous `0..R`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segmentation {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    regions: usize,
}

impl Segmentation {
    /// Accepts labels that are already contiguous `0..R`.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label count {} does not match {width}x{height}",
                labels.len()
            )));
        }
        let regions = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut used = vec![false; regions];
        for &l in &labels {
            used[l as usize] = true;
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("region id {gap} is unused")));
        }
        Ok(Self {
            width,
            height,
            labels,
            regions,
        })
    }

    /// Renumbers arbitrary labels to `0..R` in row-major order of first
    /// appearance.
    pub fn from_raw_labels<T: Copy + Eq + std::hash::Hash>(
        width: usize,
        height: usize,
        raw: &[T],
    ) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|v| {
                let next = map.len() as u32;
                *map.entry(*v).or_insert(next)
            })
            .collect();
        Self::new(width, height, labels)
    }

    /// Reads a PGM label map, renumbering gray values to `0..R`.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let raw = pnm::read_pgm(path)?;
        Self::from_raw_labels(raw.width, raw.height, &raw.data)
    }

    pub fn decode_pgm(bytes: &[u8]) -> Result<Self> {
        let raw = pnm::decode_pgm(bytes)?;
        Self::from_raw_labels(raw.width, raw.height, &raw.data)
    }

    pub fn encode_pgm(&self) -> Result<Vec<u8>> {
        Ok(pnm::encode_pgm16(self.width, self.height, &self.labels_u16()?))
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        pnm::write_pgm16(path, self.width, self.height, &self.labels_u16()?)
    }

    fn labels_u16(&self) -> Result<Vec<u16>> {
        if self.regions > usize::from(u16::MAX) + 1 {
            return Err(Error::invalid(format!(
                "{} regions do not fit a 16-bit PGM",
                self.regions
            )));
        }
        Ok(self.labels.iter().map(|&l| l as u16).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of regions `R`.
    pub fn num_regions(&self) -> usize {
        self.regions
    }

    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.regions];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::invalid(format!(
                "segmentation sizes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Human annotations of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    image_id: String,
    segmentations: Vec<Segmentation>,
}

impl AnnotationSet {
    pub fn new(image_id: impl Into<String>, segmentations: Vec<Segmentation>) -> Result<Self> {
        let image_id = image_id.into();
        let Some(first) = segmentations.first() else {
            return Err(Error::invalid(format!("image {image_id}: no annotations")));
        };
        for s in &segmentations[1..] {
            first.check_same_shape(s)?;
        }
        Ok(Self {
            image_id,
            segmentations,
        })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn segmentations(&self) -> &[Segmentation] {
        &self.segmentations
    }

    pub fn len(&self) -> usize {
        self.segmentations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segmentations.is_empty()
    }
}
