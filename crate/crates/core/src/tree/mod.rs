//! Region trees over superpixel decompositions.
//!
//! Leaves govern exactly one superpixel each; an internal node governs the
//! disjoint union of its children's superpixels. Node ids are the indices
//! `0..n` of the node array.

mod agglomerative;
mod json;
mod threshold;

pub use agglomerative::build_tree_agglomerative;
pub use json::{export_tree, import_tree};
pub use threshold::threshold_tree;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    /// Sorted ascending; empty iff the node is a leaf.
    pub children: Vec<NodeId>,
    /// Sorted ascending.
    pub superpixels: Vec<u32>,
    pub ucm_weight: Option<f64>,
}

impl RegionNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionTree {
    nodes: Vec<RegionNode>,
    root: NodeId,
    postorder: Vec<NodeId>,
    leaf_of: Vec<NodeId>,
}

impl RegionTree {
    /// Validates and normalizes a node list. Nodes may arrive in any order
    /// but their ids must be exactly `0..n`.
    pub fn from_nodes(root: NodeId, mut nodes: Vec<RegionNode>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::structure("tree has no nodes"));
        }
        nodes.sort_by_key(|node| node.id);
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                let msg = if i > 0 && nodes[i - 1].id == node.id {
                    "duplicate node id"
                } else {
                    "node ids must be contiguous from 0"
                };
                return Err(Error::at_node(node.id, msg));
            }
        }
        if root >= n {
            return Err(Error::structure(format!("root {root} does not exist")));
        }
        for node in &mut nodes {
            node.children.sort_unstable();
            node.superpixels.sort_unstable();
        }

        for node in &nodes {
            let id = node.id;
            if id == root {
                if node.parent.is_some() {
                    return Err(Error::at_node(id, "root must not have a parent"));
                }
            } else {
                let p = node
                    .parent
                    .ok_or_else(|| Error::at_node(id, "non-root node has no parent"))?;
                if p >= n {
                    return Err(Error::at_node(id, format!("dangling parent id {p}")));
                }
                if nodes[p].children.binary_search(&id).is_err() {
                    return Err(Error::at_node(
                        id,
                        format!("parent {p} does not list this node as a child"),
                    ));
                }
            }
            for (k, &c) in node.children.iter().enumerate() {
                if c >= n {
                    return Err(Error::at_node(id, format!("dangling child id {c}")));
                }
                if k > 0 && node.children[k - 1] == c {
                    return Err(Error::at_node(id, format!("child {c} listed twice")));
                }
                if nodes[c].parent != Some(id) {
                    return Err(Error::at_node(
                        c,
                        format!("listed as child of {id} but parent is {:?}", nodes[c].parent),
                    ));
                }
            }
            if node.children.len() == 1 {
                return Err(Error::at_node(id, "internal node has a single child"));
            }
            if let Some(w) = node.ucm_weight {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::at_node(id, format!("ucm_weight {w} must be finite and non-negative")));
                }
            }
        }

        let postorder = postorder(root, &nodes)?;
        if postorder.len() != n {
            let mut seen = vec![false; n];
            for &v in &postorder {
                seen[v] = true;
            }
            let stray = seen.iter().position(|&s| !s).expect("some node unvisited");
            return Err(Error::at_node(stray, "node is not reachable from the root"));
        }

        let mut leaves = 0usize;
        for &id in &postorder {
            let node = &nodes[id];
            if node.is_leaf() {
                leaves += 1;
                if node.superpixels.len() != 1 {
                    return Err(Error::at_node(
                        id,
                        format!("leaf governs {} superpixels, expected 1", node.superpixels.len()),
                    ));
                }
                continue;
            }
            let mut union: Vec<u32> = node
                .children
                .iter()
                .flat_map(|&c| nodes[c].superpixels.iter().copied())
                .collect();
            union.sort_unstable();
            if union.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::at_node(id, "children govern overlapping superpixels"));
            }
            if union != node.superpixels {
                return Err(Error::at_node(
                    id,
                    "superpixel set differs from the union of its children",
                ));
            }
        }

        let all = &nodes[root].superpixels;
        if all.iter().enumerate().any(|(i, &s)| s as usize != i) || all.len() != leaves {
            return Err(Error::at_node(
                root,
                "leaf superpixels must be exactly 0..S-1",
            ));
        }
        let mut leaf_of = vec![0; leaves];
        for node in nodes.iter().filter(|n| n.is_leaf()) {
            leaf_of[node.superpixels[0] as usize] = node.id;
        }

        Ok(Self {
            nodes,
            root,
            postorder,
            leaf_of,
        })
    }

    /// Builds a tree from child lists alone. Leaves are assigned superpixels
    /// `0..S` in increasing node-id order; no UCM weights.
    pub fn from_children(root: NodeId, children: Vec<Vec<NodeId>>) -> Result<Self> {
        let n = children.len();
        let mut parent = vec![None; n];
        for (id, ch) in children.iter().enumerate() {
            for &c in ch {
                if c >= n {
                    return Err(Error::at_node(id, format!("dangling child id {c}")));
                }
                if parent[c].is_some() {
                    return Err(Error::at_node(c, "node has more than one parent"));
                }
                parent[c] = Some(id);
            }
        }
        let mut next_sp = 0u32;
        let mut nodes: Vec<RegionNode> = children
            .into_iter()
            .enumerate()
            .map(|(id, mut children)| {
                children.sort_unstable();
                let superpixels = if children.is_empty() {
                    next_sp += 1;
                    vec![next_sp - 1]
                } else {
                    Vec::new()
                };
                RegionNode {
                    id,
                    parent: parent[id],
                    children,
                    superpixels,
                    ucm_weight: None,
                }
            })
            .collect();
        if root < n {
            if let Ok(order) = postorder(root, &nodes) {
                for id in order {
                    if !nodes[id].is_leaf() {
                        let mut sp: Vec<u32> = nodes[id]
                            .children
                            .iter()
                            .flat_map(|&c| nodes[c].superpixels.clone())
                            .collect();
                        sp.sort_unstable();
                        nodes[id].superpixels = sp;
                    }
                }
            }
        }
        Self::from_nodes(root, nodes)
    }

    /// Returns a copy with the given per-node UCM weights.
    pub fn with_ucm_weights(&self, weights: &[Option<f64>]) -> Result<Self> {
        if weights.len() != self.nodes.len() {
            return Err(Error::invalid("one weight entry per node required"));
        }
        let mut nodes = self.nodes.clone();
        for (node, &w) in nodes.iter_mut().zip(weights) {
            node.ucm_weight = w;
        }
        Self::from_nodes(self.root, nodes)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[RegionNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &RegionNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].is_leaf()
    }

    /// Children before parents; the root comes last.
    pub fn postorder(&self) -> &[NodeId] {
        &self.postorder
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.id)
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_of.len()
    }

    /// Number of superpixels, equal to the number of leaves.
    pub fn num_superpixels(&self) -> usize {
        self.leaf_of.len()
    }

    /// The leaf governing superpixel `sp`.
    pub fn leaf_of_superpixel(&self, sp: u32) -> NodeId {
        self.leaf_of[sp as usize]
    }

    /// Strict ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.nodes[id].parent, |&p| self.nodes[p].parent)
    }
}

/// Iterative postorder from `root`; fails if a node is reached twice.
fn postorder(root: NodeId, nodes: &[RegionNode]) -> Result<Vec<NodeId>> {
    let mut seen = vec![false; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![(root, false)];
    seen[root] = true;
    while let Some((id, expanded)) = stack.pop() {
        if expanded {
            order.push(id);
            continue;
        }
        stack.push((id, true));
        for &c in nodes[id].children.iter().rev() {
            if c >= nodes.len() {
                return Err(Error::at_node(id, format!("dangling child id {c}")));
            }
            if seen[c] {
                return Err(Error::at_node(c, "node reached twice (cycle or shared child)"));
            }
            seen[c] = true;
            stack.push((c, false));
        }
    }
    Ok(order)
}
