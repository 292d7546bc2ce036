use super::RegionTree;
use crate::error::{Error, Result};
use crate::model::CutConfig;

/// UCM-style thresholding: the cut made of the shallowest nodes whose
/// subtree holds no internal node with `ucm_weight > k`.
pub fn threshold_tree(tree: &RegionTree, k: f64) -> Result<CutConfig> {
    if k.is_nan() {
        return Err(Error::invalid("threshold must not be NaN"));
    }
    // largest internal weight within each subtree; leaves contribute -inf
    let mut subtree_max = vec![f64::NEG_INFINITY; tree.len()];
    for &id in tree.postorder() {
        let node = tree.node(id);
        if node.is_leaf() {
            continue;
        }
        let w = node.ucm_weight.ok_or_else(|| {
            Error::invalid(format!("internal node {id} has no ucm_weight"))
        })?;
        subtree_max[id] = node
            .children
            .iter()
            .map(|&c| subtree_max[c])
            .fold(w, f64::max);
    }

    let mut active = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        if subtree_max[id] <= k {
            active.push(id);
        } else {
            stack.extend_from_slice(tree.children(id));
        }
    }
    Ok(CutConfig::new(active))
}
