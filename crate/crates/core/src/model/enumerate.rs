use super::CutConfig;
use crate::error::{Error, Result};
use crate::tree::{NodeId, RegionTree};

/// Cap on [`enumerate_cuts`] output size used by the tooling.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Number of cuts, `C(leaf) = 1`, `C(node) = 1 + Π C(child)`; `None` on
/// `u128` overflow.
pub fn count_cuts(tree: &RegionTree) -> Option<u128> {
    let mut count = vec![0u128; tree.len()];
    for &id in tree.postorder() {
        let children = tree.children(id);
        count[id] = if children.is_empty() {
            1
        } else {
            children
                .iter()
                .try_fold(1u128, |acc, &c| acc.checked_mul(count[c]))?
                .checked_add(1)?
        };
    }
    Some(count[tree.root()])
}

/// Every cut of the tree, each exactly once: `{node}` followed by the
/// cartesian product of the children's cuts. Intended as an exact oracle
/// on small trees.
pub fn enumerate_cuts(tree: &RegionTree, cap: u64) -> Result<Vec<CutConfig>> {
    match count_cuts(tree) {
        Some(c) if c <= u128::from(cap) => {}
        other => {
            return Err(Error::ResourceLimit {
                limit: cap,
                needed: other.map_or_else(|| "more than 2^128".into(), |c| format!("{c} cuts")),
            })
        }
    }
    let mut cuts: Vec<Option<Vec<Vec<NodeId>>>> = vec![None; tree.len()];
    for &id in tree.postorder() {
        let mut here = vec![vec![id]];
        let children = tree.children(id);
        if !children.is_empty() {
            let mut product: Vec<Vec<NodeId>> = vec![Vec::new()];
            for &c in children {
                let sub = cuts[c].take().expect("children precede parents in postorder");
                product = product
                    .iter()
                    .flat_map(|prefix| {
                        sub.iter().map(move |tail| {
                            let mut v = prefix.clone();
                            v.extend_from_slice(tail);
                            v
                        })
                    })
                    .collect();
            }
            here.extend(product);
        }
        cuts[id] = Some(here);
    }
    Ok(cuts[tree.root()]
        .take()
        .expect("root visited")
        .into_iter()
        .map(CutConfig::new)
        .collect())
}
