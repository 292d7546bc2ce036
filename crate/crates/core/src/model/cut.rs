use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};
use crate::eval::Segmentation;
use crate::image::SuperpixelMap;
use crate::logspace::{ln_complement, ln_prob};
use crate::tree::{NodeId, RegionTree};

/// A set of active nodes. Serialized as `{ "active": [ids] }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "CutDocument")]
pub struct CutConfig {
    active: Vec<NodeId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CutDocument {
    active: Vec<NodeId>,
}

impl From<CutDocument> for CutConfig {
    fn from(doc: CutDocument) -> Self {
        Self::new(doc.active)
    }
}

impl CutConfig {
    /// Sorted, de-duplicated active set. Not checked against any tree.
    pub fn new(active: impl IntoIterator<Item = NodeId>) -> Self {
        let mut active: Vec<NodeId> = active.into_iter().collect();
        active.sort_unstable();
        active.dedup();
        Self { active }
    }

    pub fn active(&self) -> &[NodeId] {
        &self.active
    }

    /// Number of regions the cut induces.
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.active.binary_search(&id).is_ok()
    }

    /// Checks that every root-to-leaf path holds exactly one active node.
    pub fn validate(&self, tree: &RegionTree) -> Result<()> {
        self.classify(tree).map(|_| ())
    }

    /// Per-node status under the cut, after checking it.
    fn classify(&self, tree: &RegionTree) -> Result<Vec<Status>> {
        let mut status = vec![Status::Above; tree.len()];
        for &a in &self.active {
            if a >= tree.len() {
                return Err(Error::invalid(format!("active node {a} is not in the tree")));
            }
            status[a] = Status::Active;
        }
        let mut stack = vec![(tree.root(), false)];
        while let Some((id, covered)) = stack.pop() {
            let active = status[id] == Status::Active;
            if active && covered {
                return Err(Error::invalid(format!(
                    "cut violates one-active-node-per-path: node {id} lies below another active node"
                )));
            }
            if covered {
                status[id] = Status::Below;
            }
            let covered = covered || active;
            if tree.is_leaf(id) && !covered {
                return Err(Error::invalid(format!(
                    "cut violates one-active-node-per-path: leaf {id} has no active ancestor"
                )));
            }
            stack.extend(tree.children(id).iter().map(|&c| (c, covered)));
        }
        Ok(status)
    }

    /// The active node governing each superpixel.
    pub fn assignment(&self, tree: &RegionTree) -> Result<Vec<NodeId>> {
        self.validate(tree)?;
        let mut owner = vec![0; tree.num_superpixels()];
        for &a in &self.active {
            for &s in &tree.node(a).superpixels {
                owner[s as usize] = a;
            }
        }
        Ok(owner)
    }

    /// Implied binary state per node: 0 above the cut, 1 at or below it.
    pub fn z(&self, tree: &RegionTree) -> Result<Vec<bool>> {
        Ok(self
            .classify(tree)?
            .into_iter()
            .map(|s| s != Status::Above)
            .collect())
    }

    /// True if every region of `self` is a union of regions of `finer`.
    pub fn is_coarsening_of(&self, finer: &CutConfig, tree: &RegionTree) -> Result<bool> {
        let coarse = self.assignment(tree)?;
        let fine = finer.assignment(tree)?;
        let mut parent_of = std::collections::HashMap::new();
        for (c, f) in coarse.iter().zip(&fine) {
            if *parent_of.entry(*f).or_insert(*c) != *c {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("cut document: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Above,
    Active,
    Below,
}

/// `Σ_{i above the cut} ln(1 - p_i) + Σ_{j in the cut} ln p_j`.
pub fn prior_log_prob(tree: &RegionTree, params: &ModelParams, cut: &CutConfig) -> Result<f64> {
    params.check_tree(tree)?;
    let status = cut.classify(tree)?;
    Ok(status
        .iter()
        .enumerate()
        .map(|(id, s)| match s {
            Status::Active => ln_prob(params.p(id)),
            Status::Above => ln_complement(params.p(id)),
            Status::Below => 0.0,
        })
        .sum())
}

/// Label map of the cut: each pixel gets the region of the active node
/// governing its superpixel, renumbered `0..|cut|` in row-major order of
/// first appearance.
pub fn cut_to_segmentation(
    cut: &CutConfig,
    tree: &RegionTree,
    sp: &SuperpixelMap,
) -> Result<Segmentation> {
    if sp.count() != tree.num_superpixels() {
        return Err(Error::invalid(format!(
            "tree has {} leaves but the superpixel map has {} superpixels",
            tree.num_superpixels(),
            sp.count()
        )));
    }
    let owner = cut.assignment(tree)?;
    let mut label_of = vec![u32::MAX; tree.len()];
    let mut next = 0u32;
    let labels = sp
        .labels()
        .iter()
        .map(|&s| {
            let node = owner[s as usize];
            if label_of[node] == u32::MAX {
                label_of[node] = next;
                next += 1;
            }
            label_of[node]
        })
        .collect();
    Segmentation::new(sp.width(), sp.height(), labels)
}
