//! JSON tree documents:
//! `{ "root": id, "nodes": [ { "id", "parent", "children", "superpixels", "ucm_weight" } ] }`.

use serde::{Deserialize, Serialize};

use super::{NodeId, RegionNode, RegionTree};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDocument {
    root: NodeId,
    nodes: Vec<NodeDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDocument {
    id: NodeId,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    superpixels: Vec<u32>,
    #[serde(default)]
    ucm_weight: Option<f64>,
}

/// Parses and validates a tree document.
pub fn import_tree(document: &str) -> Result<RegionTree> {
    let doc: TreeDocument =
        serde_json::from_str(document).map_err(|e| Error::Parse(format!("tree document: {e}")))?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| RegionNode {
            id: n.id,
            parent: n.parent,
            children: n.children,
            superpixels: n.superpixels,
            ucm_weight: n.ucm_weight,
        })
        .collect();
    RegionTree::from_nodes(doc.root, nodes)
}

/// Canonical, byte-stable serialization: nodes sorted by id, one node per
/// line, fixed field order, trailing newline.
pub fn export_tree(tree: &RegionTree) -> String {
    let mut out = format!("{{\n  \"root\": {},\n  \"nodes\": [\n", tree.root());
    let n = tree.len();
    for (i, node) in tree.nodes().iter().enumerate() {
        let doc = NodeDocument {
            id: node.id,
            parent: node.parent,
            children: node.children.clone(),
            superpixels: node.superpixels.clone(),
            ucm_weight: node.ucm_weight,
        };
        out.push_str("    ");
        out.push_str(&serde_json::to_string(&doc).expect("plain data serializes"));
        out.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

impl RegionTree {
    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        import_tree(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, export_tree(self)).map_err(|e| Error::io(path, e))
    }
}
