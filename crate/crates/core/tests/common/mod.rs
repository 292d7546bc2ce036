#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treecut_core::logspace::log_sum_exp;
use treecut_core::model::{enumerate_cuts, prior_log_prob, DEFAULT_ENUMERATION_CAP};
use treecut_core::synthetic::{random_logliks, random_params, random_tree};
use treecut_core::{CutConfig, ModelParams, RegionTree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree, parameters and log-likelihood table.
pub fn random_problem(seed: u64, max_leaves: usize, bound: f64) -> (RegionTree, ModelParams, Vec<f64>) {
    use rand::Rng;
    let mut r = rng(seed);
    let leaves = r.random_range(2..=max_leaves);
    let tree = random_tree(&mut r, leaves).unwrap();
    let params = random_params(&mut r, &tree).unwrap();
    let ll = random_logliks(&mut r, &tree, bound);
    (tree, params, ll)
}

/// Every cut with its joint log-probability `ln p(cut) + Σ ll`.
pub fn joint_by_enumeration(tree: &RegionTree, params: &ModelParams, ll: &[f64]) -> Vec<(CutConfig, f64)> {
    enumerate_cuts(tree, DEFAULT_ENUMERATION_CAP)
        .unwrap()
        .into_iter()
        .map(|cut| {
            let prior = prior_log_prob(tree, params, &cut).unwrap();
            let lik: f64 = cut.active().iter().map(|&i| ll[i]).sum();
            (cut, prior + lik)
        })
        .collect()
}

pub fn log_evidence_by_enumeration(joint: &[(CutConfig, f64)]) -> f64 {
    log_sum_exp(&joint.iter().map(|(_, v)| *v).collect::<Vec<_>>())
}

/// Full binary tree of depth 3: root 6 over nodes 4 (leaves 0, 1) and
/// 5 (leaves 2, 3). It has 5 cuts.
pub fn five_cut_tree() -> RegionTree {
    RegionTree::from_children(
        6,
        vec![vec![], vec![], vec![], vec![], vec![0, 1], vec![2, 3], vec![4, 5]],
    )
    .unwrap()
}
