use super::Segmentation;
use crate::error::Result;

/// Joint label counts of two equally sized segmentations.
pub(crate) struct Contingency {
    pub total: u64,
    pub rows: Vec<u64>,
    pub cols: Vec<u64>,
    /// Non-zero cells `(row, col, count)`, sorted by row then col.
    pub cells: Vec<(u32, u32, u64)>,
}

impl Contingency {
    pub fn new(a: &Segmentation, b: &Segmentation) -> Result<Self> {
        a.check_same_shape(b)?;
        let nb = b.num_regions() as u64;
        let mut keys: Vec<u64> = a
            .labels()
            .iter()
            .zip(b.labels())
            .map(|(&x, &y)| u64::from(x) * nb + u64::from(y))
            .collect();
        keys.sort_unstable();
        let mut cells: Vec<(u32, u32, u64)> = Vec::new();
        for key in keys {
            let (r, c) = ((key / nb) as u32, (key % nb) as u32);
            match cells.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += 1,
                _ => cells.push((r, c, 1)),
            }
        }
        Ok(Self {
            total: a.len() as u64,
            rows: a.region_sizes().into_iter().map(|v| v as u64).collect(),
            cols: b.region_sizes().into_iter().map(|v| v as u64).collect(),
            cells,
        })
    }
}
