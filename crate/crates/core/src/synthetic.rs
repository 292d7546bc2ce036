//! Synthetic trees, parameters and images for tests, demos and tuning
//! experiments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::eval::Segmentation;
use crate::image::{Image, SuperpixelMap};
use crate::model::ModelParams;
use crate::superpixel::grid_superpixels;
use crate::tree::{NodeId, RegionTree};
use crate::tuning::Scale;

/// Random tree with `leaves` leaves and internal arities between 2 and 4.
///
/// Internal nodes are formed by repeatedly grouping a random run of
/// consecutive subtrees, so leaf order is preserved and every internal node
/// has at least two children.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, leaves: usize) -> Result<RegionTree> {
    if leaves == 0 {
        return Err(Error::invalid("a tree needs at least one leaf"));
    }
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); leaves];
    let mut roots: Vec<NodeId> = (0..leaves).collect();
    while roots.len() > 1 {
        let k = rng.random_range(2..=roots.len().min(4));
        let start = rng.random_range(0..=roots.len() - k);
        let id = children.len();
        children.push(roots.splice(start..start + k, [id]).collect());
    }
    RegionTree::from_children(roots[0], children)
}

/// Independent uniform `p` on every internal node.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, tree: &RegionTree) -> Result<ModelParams> {
    let p = (0..tree.len())
        .map(|id| if tree.is_leaf(id) { 1.0 } else { rng.random::<f64>() })
        .collect();
    ModelParams::per_node(tree, p)
}

/// Independent log-likelihoods uniform in `[-bound, bound]`.
pub fn random_logliks<R: Rng + ?Sized>(rng: &mut R, tree: &RegionTree, bound: f64) -> Vec<f64> {
    (0..tree.len())
        .map(|_| rng.random_range(-bound..=bound))
        .collect()
}

fn level_side(level: Scale) -> usize {
    match level {
        Scale::Coarse => 2,
        Scale::Medium => 4,
        Scale::Fine => 8,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyOptions {
    /// Image side in pixels; must be divisible by `8 * superpixel_cell`.
    pub size: usize,
    pub superpixel_cell: usize,
    /// Color offset magnitude per level, coarse to fine.
    pub offsets: [f64; 3],
    /// Standard deviation of per-pixel Gaussian noise.
    pub noise: f64,
}

impl HierarchyOptions {
    /// Distinct quadrants with faint sub-quadrant texture and uniform blocks.
    pub fn coarse_scene() -> Self {
        Self {
            offsets: [0.2, 0.015, 0.0],
            ..Self::default()
        }
    }

    /// Every block visibly distinct.
    pub fn fine_scene() -> Self {
        Self {
            offsets: [0.2, 0.1, 0.06],
            ..Self::default()
        }
    }
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            size: 64,
            superpixel_cell: 4,
            offsets: [0.2, 0.1, 0.04],
            noise: 0.01,
        }
    }
}

/// An image with a planted three-level block hierarchy (2×2 quadrants, 4×4
/// sub-quadrants, 8×8 blocks), its grid superpixels, the matching 4-ary
/// region tree and a ground truth per level.
#[derive(Debug, Clone)]
pub struct HierarchyImage {
    pub image: Image,
    pub superpixels: SuperpixelMap,
    /// Leaves are the superpixels, then blocks, sub-quadrants, quadrants and
    /// the root. UCM weights are 0.25, 0.5, 0.75 and 1 by level
    /// (smaller still for merges inside blocks).
    pub tree: RegionTree,
    ground_truths: [Segmentation; 3],
}

impl HierarchyImage {
    pub fn ground_truth(&self, level: Scale) -> &Segmentation {
        &self.ground_truths[level as usize]
    }
}

/// Generates a [`HierarchyImage`]. Each level adds a random color offset of
/// the configured magnitude to every region at that level, on top of a
/// random base color.
pub fn hierarchy_image(options: &HierarchyOptions, seed: u64) -> Result<HierarchyImage> {
    let HierarchyOptions {
        size,
        superpixel_cell: cell,
        offsets,
        noise,
    } = *options;
    if cell == 0 || size == 0 || size % (8 * cell) != 0 {
        return Err(Error::invalid(format!(
            "image size {size} must be a positive multiple of 8 x superpixel cell {cell}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise must be finite and >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.35..0.65));
    let mut shifts = Vec::with_capacity(3);
    for (level, &magnitude) in Scale::ALL.iter().zip(&offsets) {
        let n = level_side(*level).pow(2);
        shifts.push(
            (0..n)
                .map(|_| random_direction(&mut rng).map(|d| d * magnitude))
                .collect::<Vec<_>>(),
        );
    }
    let normal = Normal::new(0.0, noise).map_err(|e| Error::invalid(e.to_string()))?;
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let mut px = base;
            for (level, shift) in Scale::ALL.iter().zip(&shifts) {
                let s = shift[region_index(*level, size, x, y)];
                for c in 0..3 {
                    px[c] += s[c];
                }
            }
            pixels.push(px.map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0)));
        }
    }
    let image = Image::new(size, size, pixels)?;
    let superpixels = grid_superpixels(&image, cell)?;
    let tree = planted_tree(size / cell)?;
    let ground_truths = Scale::ALL.map(|level| {
        let labels = (0..size * size)
            .map(|i| region_index(level, size, i % size, i / size) as u32)
            .collect::<Vec<_>>();
        Segmentation::from_raw_labels(size, size, &labels)
    });
    let [a, b, c] = ground_truths;
    Ok(HierarchyImage {
        image,
        superpixels,
        tree,
        ground_truths: [a?, b?, c?],
    })
}

/// Likelihood scale at which the two families of [`two_scale_dataset`]
/// have MAP-reachable ground truths within the default `p` range.
pub const TWO_SCALE_LAMBDA: f64 = 0.01;

/// A synthetic image annotated at one scale.
#[derive(Debug, Clone)]
pub struct PlantedScene {
    pub id: String,
    pub scale: Scale,
    pub data: HierarchyImage,
}

impl PlantedScene {
    pub fn annotation(&self) -> &Segmentation {
        self.data.ground_truth(self.scale)
    }
}

/// `per_scale` coarse scenes annotated by quadrant followed by `per_scale`
/// fine scenes annotated by block.
pub fn two_scale_dataset(per_scale: usize, seed: u64) -> Result<Vec<PlantedScene>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = Vec::with_capacity(2 * per_scale);
    for (scale, options) in [
        (Scale::Coarse, HierarchyOptions::coarse_scene()),
        (Scale::Fine, HierarchyOptions::fine_scene()),
    ] {
        for i in 0..per_scale {
            scenes.push(PlantedScene {
                id: format!("{}-{i}", scale.name()),
                scale,
                data: hierarchy_image(&options, rng.random())?,
            });
        }
    }
    Ok(scenes)
}

fn region_index(level: Scale, size: usize, x: usize, y: usize) -> usize {
    let side = level_side(level);
    let span = size / side;
    (y / span) * side + x / span
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.map(|c| c / norm);
        }
    }
}

/// 4-ary quadtree over a `cells × cells` grid of superpixels numbered
/// row-major, with superpixel `s` at leaf node `s`. Each level merges 2×2
/// groups; the weight of a merge halves with every level below the root's
/// children.
fn planted_tree(cells: usize) -> Result<RegionTree> {
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); cells * cells];
    let mut weights: Vec<Option<f64>> = vec![None; cells * cells];
    // current level: grid of node ids
    let mut grid: Vec<NodeId> = (0..cells * cells).collect();
    let mut side = cells;
    while side > 1 {
        let half = side / 2;
        let weight = match half {
            1 => 1.0,
            2 => 0.75,
            4 => 0.5,
            h => 2.0 / h as f64,
        };
        let mut next = Vec::with_capacity(half * half);
        for gy in 0..half {
            for gx in 0..half {
                let id = children.len();
                children.push(vec![
                    grid[2 * gy * side + 2 * gx],
                    grid[2 * gy * side + 2 * gx + 1],
                    grid[(2 * gy + 1) * side + 2 * gx],
                    grid[(2 * gy + 1) * side + 2 * gx + 1],
                ]);
                weights.push(Some(weight));
                next.push(id);
            }
        }
        grid = next;
        side = half;
    }
    let root = grid[0];
    RegionTree::from_children(root, children)?.with_ucm_weights(&weights)
}
