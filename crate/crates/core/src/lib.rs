//! Probabilistic segmentation by cutting region trees.
//!
//! An image is first over-segmented into superpixels, which become the
//! leaves of a [`RegionTree`]. A segmentation is a cut of that tree: a set of
//! active nodes with exactly one on every root-to-leaf path. The
//! [`model`] module defines a prior over cuts from per-node activation
//! probabilities and, combined with region likelihoods from [`likelihood`],
//! computes exact evidence, MAP cuts, posterior samples and node marginals
//! by dynamic programming on the tree. [`eval`] scores segmentations against
//! human annotations and [`tuning`] fits the global parameters.
//!
//! ```
//! use treecut_core::{grid_superpixels, build_tree_agglomerative, region_loglik_table};
//! use treecut_core::{Image, LikelihoodConfig, ModelParams, PosteriorTables, cut_to_segmentation};
//!
//! let pixels = (0..64).map(|i| if i % 8 < 4 { [0.1, 0.2, 0.3] } else { [0.9, 0.8, 0.7] }).collect();
//! let image = Image::new(8, 8, pixels).unwrap();
//! let sp = grid_superpixels(&image, 2).unwrap();
//! let tree = build_tree_agglomerative(&image, &sp).unwrap();
//! let logliks = region_loglik_table(&tree, &image, &sp, None, &LikelihoodConfig::default()).unwrap();
//! let params = ModelParams::global(&tree, 0.9).unwrap();
//! let tables = PosteriorTables::compute(&tree, &params, &logliks).unwrap();
//! let (cut, _score) = tables.map_cut(&tree);
//! let seg = cut_to_segmentation(&cut, &tree, &sp).unwrap();
//! assert_eq!(seg.num_regions(), 2);
//! ```

pub mod error;
pub mod eval;
pub mod image;
pub mod likelihood;
pub mod logspace;
pub mod model;
pub mod pnm;
pub mod superpixel;
pub mod synthetic;
pub mod tree;
pub mod tuning;

pub use error::{Error, Result};
pub use eval::{AnnotationSet, Metric, MetricReport, Segmentation};
pub use image::{Image, SuperpixelMap};
pub use likelihood::{region_loglik_table, LikelihoodConfig, LikelihoodMode};
pub use model::{cut_to_segmentation, CutConfig, ModelParams, PosteriorTables};
pub use superpixel::{color_superpixels, grid_superpixels};
pub use tree::{build_tree_agglomerative, export_tree, import_tree, threshold_tree, RegionTree};
