use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CutConfig, ModelParams};
use crate::error::{Error, Result};
use crate::logspace::{ln_complement, ln_prob, log_add_exp};
use crate::tree::{NodeId, RegionTree};

/// Generator behind every seeded sampling entry point: ChaCha with 8
/// rounds, seeded through `SeedableRng::seed_from_u64`. Its output stream
/// is fixed by the algorithm, so samples reproduce across platforms.
pub type SampleRng = ChaCha8Rng;

/// Bottom-up dynamic-programming tables, all in natural-log units and
/// indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTables {
    /// `ln p(Y_i)`: evidence of the data under node `i`, summed over cuts.
    pub total: Vec<f64>,
    /// `ln p_i + ln p(Y_Δi)`: mass from activating `i`.
    pub direct: Vec<f64>,
    /// `ln(1 - p_i) + Σ_children total`: mass from delegating to the children.
    pub indirect: Vec<f64>,
    /// `ln p*(Y_i)`: best single-cut score under node `i`.
    pub best: Vec<f64>,
    /// `ln(1 - p_i) + Σ_children best`.
    pub best_indirect: Vec<f64>,
    /// MAP decision per node; exact ties favour activation.
    pub choose_direct: Vec<bool>,
    root: NodeId,
}

impl PosteriorTables {
    pub fn compute(tree: &RegionTree, params: &ModelParams, logliks: &[f64]) -> Result<Self> {
        params.check_tree(tree)?;
        if logliks.len() != tree.len() {
            return Err(Error::invalid(format!(
                "{} log-likelihoods for {} nodes",
                logliks.len(),
                tree.len()
            )));
        }
        if let Some(id) = logliks.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::invalid(format!(
                "log-likelihood of node {id} is {}",
                logliks[id]
            )));
        }
        let n = tree.len();
        let mut t = Self {
            total: vec![0.0; n],
            direct: vec![0.0; n],
            indirect: vec![f64::NEG_INFINITY; n],
            best: vec![0.0; n],
            best_indirect: vec![f64::NEG_INFINITY; n],
            choose_direct: vec![true; n],
            root: tree.root(),
        };
        for &id in tree.postorder() {
            let p = params.p(id);
            let direct = ln_prob(p) + logliks[id];
            t.direct[id] = direct;
            let children = tree.children(id);
            if children.is_empty() {
                t.total[id] = direct;
                t.best[id] = direct;
                continue;
            }
            let log_stop = ln_complement(p);
            let (sum_total, sum_best) = children
                .iter()
                .fold((0.0, 0.0), |(a, b), &c| (a + t.total[c], b + t.best[c]));
            let indirect = log_stop + sum_total;
            let best_indirect = log_stop + sum_best;
            t.indirect[id] = indirect;
            t.best_indirect[id] = best_indirect;
            t.total[id] = log_add_exp(direct, indirect);
            let take_direct = direct >= best_indirect;
            t.choose_direct[id] = take_direct;
            t.best[id] = if take_direct { direct } else { best_indirect };
        }
        Ok(t)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// `ln p(Y)` at the root.
    pub fn log_evidence(&self) -> f64 {
        self.total[self.root]
    }

    /// `ln p(z_i = 1 | Y_i, all ancestors inactive)`, the log-share of the
    /// direct term at node `i`.
    pub fn log_activation(&self, id: NodeId) -> f64 {
        if self.indirect[id] == f64::NEG_INFINITY {
            0.0
        } else if self.direct[id] == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.direct[id] - self.total[id]
        }
    }

    /// `ln` of the complementary share: delegating to the children.
    fn log_delegation(&self, id: NodeId) -> f64 {
        if self.indirect[id] == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if self.direct[id] == f64::NEG_INFINITY {
            0.0
        } else {
            self.indirect[id] - self.total[id]
        }
    }

    /// Backtracks the stored decisions from the root. Returns the cut and
    /// `ln p*(Y)`, the joint log-probability of that cut and the data.
    pub fn map_cut(&self, tree: &RegionTree) -> (CutConfig, f64) {
        let mut active = Vec::new();
        let mut stack = vec![tree.root()];
        while let Some(id) = stack.pop() {
            if self.choose_direct[id] {
                active.push(id);
            } else {
                stack.extend_from_slice(tree.children(id));
            }
        }
        (CutConfig::new(active), self.best[tree.root()])
    }

    /// One exact ancestral draw from `p(z | Y)`.
    pub fn sample_cut<R: Rng + ?Sized>(&self, tree: &RegionTree, rng: &mut R) -> CutConfig {
        let mut active = Vec::new();
        let mut stack = vec![tree.root()];
        while let Some(id) = stack.pop() {
            let children = tree.children(id);
            let activate = children.is_empty() || {
                let share = self.log_activation(id).exp();
                rng.random::<f64>() < share
            };
            if activate {
                active.push(id);
            } else {
                // reversed so children are visited in ascending order
                stack.extend(children.iter().rev());
            }
        }
        CutConfig::new(active)
    }

    /// `n` draws from one generator stream.
    pub fn sample_cuts(&self, tree: &RegionTree, n: usize, seed: u64) -> Vec<CutConfig> {
        let mut rng = SampleRng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_cut(tree, &mut rng)).collect()
    }

    /// Top-down propagation of the probability of reaching each node with
    /// every ancestor inactive.
    pub fn node_marginals(&self, tree: &RegionTree) -> NodeMarginals {
        let n = tree.len();
        let mut log_reach = vec![f64::NEG_INFINITY; n];
        log_reach[tree.root()] = 0.0;
        for &id in tree.postorder().iter().rev() {
            let pass = log_reach[id] + self.log_delegation(id);
            for &c in tree.children(id) {
                log_reach[c] = pass;
            }
        }
        let reach: Vec<f64> = log_reach.iter().map(|v| v.exp()).collect();
        let active: Vec<f64> = (0..n)
            .map(|id| (log_reach[id] + self.log_activation(id)).exp())
            .collect();
        let on = (0..n).map(|id| 1.0 - (reach[id] - active[id])).collect();
        NodeMarginals { reach, active, on }
    }
}

/// Posterior node marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMarginals {
    /// `P(all strict ancestors of i inactive | Y)`.
    pub reach: Vec<f64>,
    /// `P(i is an active node of the cut | Y)`.
    pub active: Vec<f64>,
    /// `p(z_i = 1 | Y)`: `i` is active or lies below an active node.
    pub on: Vec<f64>,
}

/// `ln p(Y)` by the bottom-up recursion.
pub fn total_log_prob(tree: &RegionTree, params: &ModelParams, logliks: &[f64]) -> Result<f64> {
    Ok(PosteriorTables::compute(tree, params, logliks)?.log_evidence())
}

/// MAP cut and its score `ln p*(Y)`.
pub fn map_cut(tree: &RegionTree, params: &ModelParams, logliks: &[f64]) -> Result<(CutConfig, f64)> {
    Ok(PosteriorTables::compute(tree, params, logliks)?.map_cut(tree))
}

/// A single posterior sample drawn with a generator seeded from `seed`.
pub fn sample_cut(
    tree: &RegionTree,
    params: &ModelParams,
    logliks: &[f64],
    seed: u64,
) -> Result<CutConfig> {
    let tables = PosteriorTables::compute(tree, params, logliks)?;
    let mut rng = SampleRng::seed_from_u64(seed);
    Ok(tables.sample_cut(tree, &mut rng))
}

pub fn node_marginals(
    tree: &RegionTree,
    params: &ModelParams,
    logliks: &[f64],
) -> Result<NodeMarginals> {
    Ok(PosteriorTables::compute(tree, params, logliks)?.node_marginals(tree))
}
