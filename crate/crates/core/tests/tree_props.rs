mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use treecut_core::synthetic::random_tree;
use treecut_core::{
    build_tree_agglomerative, export_tree, grid_superpixels, import_tree, threshold_tree, Image,
    RegionTree,
};

/// Random tree with weights that grow towards the root.
fn weighted_tree(seed: u64, leaves: usize) -> RegionTree {
    let mut r = rng(seed);
    let tree = random_tree(&mut r, leaves).unwrap();
    let mut w = vec![None; tree.len()];
    for &id in tree.postorder() {
        if !tree.is_leaf(id) {
            let below = tree
                .children(id)
                .iter()
                .filter_map(|&c| w[c])
                .fold(0.0f64, f64::max);
            w[id] = Some((below + r.random_range(0.0..0.2)).min(1.0));
        }
    }
    tree.with_ucm_weights(&w).unwrap()
}

fn random_image(seed: u64, w: usize, h: usize) -> Image {
    let mut r = rng(seed);
    let pixels = (0..w * h)
        .map(|_| std::array::from_fn(|_| f64::from(r.random_range(0u8..4)) / 3.0))
        .collect();
    Image::new(w, h, pixels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_cuts_are_valid_and_nested(seed in any::<u64>(), leaves in 1usize..40, k1 in 0.0f64..1.0, k2 in 0.0f64..1.0) {
        let tree = weighted_tree(seed, leaves);
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let fine = threshold_tree(&tree, lo).unwrap();
        let coarse = threshold_tree(&tree, hi).unwrap();
        fine.validate(&tree).unwrap();
        coarse.validate(&tree).unwrap();
        prop_assert!(coarse.is_coarsening_of(&fine, &tree).unwrap());
        prop_assert!(coarse.len() <= fine.len());
    }

    #[test]
    fn threshold_extremes(seed in any::<u64>(), leaves in 2usize..40) {
        let tree = weighted_tree(seed, leaves);
        let top = threshold_tree(&tree, 1.0).unwrap();
        prop_assert_eq!(top.active(), &[tree.root()]);
        let all = threshold_tree(&tree, -1.0);
        // negative thresholds are rejected or give the leaves
        if let Ok(cut) = all {
            prop_assert_eq!(cut.len(), tree.num_leaves());
        }
    }

    #[test]
    fn json_round_trip_is_identity(seed in any::<u64>(), leaves in 1usize..40) {
        let tree = weighted_tree(seed, leaves);
        let doc = export_tree(&tree);
        let back = import_tree(&doc).unwrap();
        prop_assert_eq!(&back, &tree);
        prop_assert_eq!(export_tree(&back), doc);
    }

    #[test]
    fn agglomeration_is_binary_and_monotone(seed in any::<u64>(), w in 2usize..12, h in 2usize..12, cell in 1usize..4) {
        let image = random_image(seed, w, h);
        let cell = cell.min(w).min(h);
        let sp = grid_superpixels(&image, cell).unwrap();
        let tree = build_tree_agglomerative(&image, &sp).unwrap();
        let s = sp.count();
        prop_assert_eq!(tree.len(), 2 * s - 1);
        prop_assert_eq!(tree.num_leaves(), s);
        for node in tree.nodes() {
            if !node.is_leaf() {
                prop_assert_eq!(node.children.len(), 2);
                let w = node.ucm_weight.unwrap();
                for &c in &node.children {
                    prop_assert!(tree.node(c).ucm_weight.unwrap_or(0.0) <= w);
                }
            }
        }
        prop_assert_eq!(&build_tree_agglomerative(&image, &sp).unwrap(), &tree);
    }
}

#[test]
fn threshold_below_all_weights_gives_leaves() {
    let tree = weighted_tree(5, 9);
    let min = tree
        .nodes()
        .iter()
        .filter_map(|n| n.ucm_weight)
        .fold(f64::INFINITY, f64::min);
    let cut = threshold_tree(&tree, min / 2.0).unwrap();
    assert_eq!(cut.len(), 9);
}

#[test]
fn import_rejects_structural_errors() {
    let unary = r#"{"root": 1, "nodes": [
        {"id": 0, "parent": 1, "children": [], "superpixels": [0]},
        {"id": 1, "parent": null, "children": [0], "superpixels": [0]}]}"#;
    let err = import_tree(unary).unwrap_err().to_string();
    assert!(err.contains("node 1"), "{err}");

    let fat_leaf = r#"{"root": 2, "nodes": [
        {"id": 0, "parent": 2, "children": [], "superpixels": [0, 2]},
        {"id": 1, "parent": 2, "children": [], "superpixels": [1]},
        {"id": 2, "parent": null, "children": [0, 1], "superpixels": [0, 1, 2]}]}"#;
    let err = import_tree(fat_leaf).unwrap_err().to_string();
    assert!(err.contains("node 0"), "{err}");

    let dangling = r#"{"root": 2, "nodes": [
        {"id": 0, "parent": 2, "children": [], "superpixels": [0]},
        {"id": 1, "parent": 2, "children": [], "superpixels": [1]},
        {"id": 2, "parent": null, "children": [0, 7], "superpixels": [0, 1]}]}"#;
    assert!(import_tree(dangling).is_err());

    assert!(import_tree("{\"root\": 0}").is_err());
    assert!(import_tree("not json").is_err());
}

#[test]
fn export_is_stable() {
    let tree = weighted_tree(11, 6);
    assert_eq!(export_tree(&tree), export_tree(&tree.clone()));
}
