use crate::error::{Error, Result};
use crate::tree::{NodeId, RegionTree};

/// Per-node activation probabilities. Leaves are always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    p: Vec<f64>,
}

impl ModelParams {
    /// One `p` for every internal node (the root included).
    pub fn global(tree: &RegionTree, p: f64) -> Result<Self> {
        check_probability(p, None)?;
        Ok(Self {
            p: tree
                .nodes()
                .iter()
                .map(|n| if n.is_leaf() { 1.0 } else { p })
                .collect(),
        })
    }

    pub fn per_node(tree: &RegionTree, p: Vec<f64>) -> Result<Self> {
        if p.len() != tree.len() {
            return Err(Error::invalid(format!(
                "{} activation probabilities for {} nodes",
                p.len(),
                tree.len()
            )));
        }
        for (id, &v) in p.iter().enumerate() {
            check_probability(v, Some(id))?;
            if tree.is_leaf(id) && v != 1.0 {
                return Err(Error::invalid(format!(
                    "leaf {id} must have p = 1, got {v}"
                )));
            }
        }
        Ok(Self { p })
    }

    pub fn p(&self, id: NodeId) -> f64 {
        self.p[id]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub(crate) fn check_tree(&self, tree: &RegionTree) -> Result<()> {
        if self.p.len() != tree.len() {
            return Err(Error::invalid(format!(
                "parameters cover {} nodes but the tree has {}",
                self.p.len(),
                tree.len()
            )));
        }
        Ok(())
    }
}

fn check_probability(p: f64, node: Option<NodeId>) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        let at = node.map(|n| format!(" at node {n}")).unwrap_or_default();
        Err(Error::invalid(format!("activation probability {p}{at} outside [0, 1]")))
    }
}
