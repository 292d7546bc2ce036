//! The tree-cut model.
//!
//! Each internal node `i` carries an activation probability `p_i`; leaves
//! have `p = 1`. Starting at the root, a node is either activated (its
//! superpixels form one region) or left inactive, in which case each child
//! is considered in turn. Every root-to-leaf path therefore crosses exactly
//! one active node, and the active set is a cut of the tree.
//!
//! With region log-likelihoods attached to every node, a single bottom-up
//! pass yields the evidence `log p(Y)`, the best attainable score, and the
//! direct/indirect split needed to backtrack a MAP cut, draw exact posterior
//! samples, or propagate node marginals top-down. Everything runs in log
//! space.

mod cut;
mod enumerate;
mod inference;
mod params;

pub use cut::{cut_to_segmentation, prior_log_prob, CutConfig};
pub use enumerate::{count_cuts, enumerate_cuts, DEFAULT_ENUMERATION_CAP};
pub use inference::{
    map_cut, node_marginals, sample_cut, total_log_prob, NodeMarginals, PosteriorTables,
    SampleRng,
};
pub use params::ModelParams;
