//! Acceptance suite: one line per criterion, then a single assertion that
//! nothing failed.

mod common;

use std::io::Write as _;
use std::time::{Duration, Instant};

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tempfile::tempdir;
use treecut_core::eval::{covering, pri, rand_index, vi};
use treecut_core::logspace::log_sum_exp;
use treecut_core::model::{enumerate_cuts, map_cut, prior_log_prob, DEFAULT_ENUMERATION_CAP};
use treecut_core::synthetic::{
    hierarchy_image, random_logliks, random_params, random_tree, two_scale_dataset,
    HierarchyOptions, TWO_SCALE_LAMBDA,
};
use treecut_core::tuning::{cross_scale_grid_search, scale_split, ParamGrid, Scale, TrainSet, TuningImage};
use treecut_core::{
    build_tree_agglomerative, color_superpixels, cut_to_segmentation, region_loglik_table,
    AnnotationSet, CutConfig, LikelihoodConfig, Metric, ModelParams, PosteriorTables, RegionTree,
    Segmentation,
};

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    Unattainable,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { status: Status::Pass, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { status: Status::Fail, detail: detail.into() }
}

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let mut out = f();
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > b && out.status == Status::Pass {
                out = fail(format!("{} (took {took:.2?}, budget {b:?})", out.detail));
            }
        }
        let tag = match out.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Unattainable => "UNATTAINABLE",
        };
        // bypasses the test harness capture so the report shows in every run
        let _ = writeln!(std::io::stdout(), "{tag:<12} {name}: {} [{took:.2?}]", out.detail);
        if out.status == Status::Fail {
            self.failures.push(name.to_owned());
        }
    }
}

fn problem(seed: u64, max_leaves: usize, bound: f64) -> (RegionTree, ModelParams, Vec<f64>) {
    let mut r = StdRng::seed_from_u64(seed);
    let leaves = r.random_range(2..=max_leaves);
    let tree = random_tree(&mut r, leaves).unwrap();
    let params = random_params(&mut r, &tree).unwrap();
    let ll = random_logliks(&mut r, &tree, bound);
    (tree, params, ll)
}

fn joint(tree: &RegionTree, params: &ModelParams, ll: &[f64]) -> Vec<(CutConfig, f64)> {
    enumerate_cuts(tree, DEFAULT_ENUMERATION_CAP)
        .unwrap()
        .into_iter()
        .map(|c| {
            let v = prior_log_prob(tree, params, &c).unwrap() + c.active().iter().map(|&i| ll[i]).sum::<f64>();
            (c, v)
        })
        .collect()
}

fn normalization() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..120 {
        let (tree, params, _) = problem(seed, 12, 1.0);
        let total: f64 = enumerate_cuts(&tree, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .iter()
            .map(|c| prior_log_prob(&tree, &params, c).unwrap().exp())
            .sum();
        worst = worst.max((total - 1.0).abs());
    }
    if worst < 1e-10 {
        pass(format!("120 trees, max |sum - 1| = {worst:.1e}"))
    } else {
        fail(format!("max |sum - 1| = {worst:e}"))
    }
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..60 {
        let (tree, params, ll) = problem(1000 + seed, 10, 20.0);
        let j = joint(&tree, &params, &ll);
        let evidence = log_sum_exp(&j.iter().map(|(_, v)| *v).collect::<Vec<_>>());
        let tables = PosteriorTables::compute(&tree, &params, &ll).unwrap();
        worst = worst.max((tables.log_evidence() - evidence).abs());
        let (cut, score) = tables.map_cut(&tree);
        let best = j.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
        let own = j.iter().find(|(c, _)| *c == cut).map(|(_, v)| *v).unwrap();
        worst = worst.max((score - best).abs()).max((own - best).abs());
        let m = tables.node_marginals(&tree);
        for id in 0..tree.len() {
            let active: f64 = j
                .iter()
                .filter(|(c, _)| c.contains(id))
                .map(|(_, v)| (v - evidence).exp())
                .sum();
            worst = worst.max((m.active[id] - active).abs());
        }
    }
    if worst <= 1e-9 {
        pass(format!("60 trees, max deviation {worst:.1e}"))
    } else {
        fail(format!("max deviation {worst:e}"))
    }
}

fn sampler() -> Outcome {
    let tree = RegionTree::from_children(
        6,
        vec![vec![], vec![], vec![], vec![], vec![0, 1], vec![2, 3], vec![4, 5]],
    )
    .unwrap();
    let params = ModelParams::per_node(&tree, vec![1.0, 1.0, 1.0, 1.0, 0.3, 0.6, 0.5]).unwrap();
    let ll = vec![-1.0, -0.5, -2.0, -0.2, -1.2, -2.5, -3.0];
    let j = joint(&tree, &params, &ll);
    let evidence = log_sum_exp(&j.iter().map(|(_, v)| *v).collect::<Vec<_>>());
    let tables = PosteriorTables::compute(&tree, &params, &ll).unwrap();
    let n = 100_000;
    let samples = tables.sample_cuts(&tree, n, 42);
    let tv = j
        .iter()
        .map(|(c, v)| {
            let freq = samples.iter().filter(|s| *s == c).count() as f64 / n as f64;
            (freq - (v - evidence).exp()).abs()
        })
        .sum::<f64>()
        / 2.0;

    let two = RegionTree::from_children(2, vec![vec![], vec![], vec![0, 1]]).unwrap();
    let p = ModelParams::global(&two, 0.5).unwrap();
    let ll2 = [0.6f64.ln(), 0.5f64.ln(), 0.2f64.ln()];
    let t2 = PosteriorTables::compute(&two, &p, &ll2).unwrap();
    let root = t2.sample_cuts(&two, n, 7).iter().filter(|c| c.active() == [2]).count() as f64 / n as f64;

    let detail = format!("{} cuts, TV {tv:.4}; two-leaf P(root) {root:.4} vs 0.4", j.len());
    if j.len() == 5 && tv < 0.01 && (root - 0.4).abs() < 0.005 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn limit_literal() -> Outcome {
    // two leaves under a root, tables at the edge of [-1e3, 1e3]
    let tree = RegionTree::from_children(2, vec![vec![], vec![], vec![0, 1]]).unwrap();
    let high = ModelParams::global(&tree, 1.0 - 1e-9).unwrap();
    let (at_high, _) = map_cut(&tree, &high, &[1e3, 1e3, -1e3]).unwrap();
    let low = ModelParams::global(&tree, 1e-9).unwrap();
    let (at_low, _) = map_cut(&tree, &low, &[-1e3, -1e3, 1e3]).unwrap();
    if at_high.len() == 2 && at_low.len() == 1 {
        Outcome {
            status: Status::Unattainable,
            detail: "prior gap at p = 1-1e-9 is only ln(1e9) ~ 20.7 nats; ll = [1e3, 1e3, -1e3] \
                     gives 2 regions at p = 1-1e-9 and the mirrored table 1 region at p = 1e-9"
                .into(),
        }
    } else {
        fail("counterexample no longer reproduces; revisit the analysis")
    }
}

fn limit_bounded() -> Outcome {
    for seed in 0..200 {
        let (tree, _, ll) = problem(3000 + seed, 12, 0.8);
        let high = ModelParams::global(&tree, 1.0 - 1e-9).unwrap();
        let (cut, _) = map_cut(&tree, &high, &ll).unwrap();
        if cut.active() != [tree.root()] {
            return fail(format!("seed {seed}: {} regions at p = 1-1e-9", cut.len()));
        }
        let low = ModelParams::global(&tree, 1e-9).unwrap();
        let (cut, _) = map_cut(&tree, &low, &ll).unwrap();
        if cut.len() != tree.num_leaves() || !cut.active().iter().all(|&i| tree.is_leaf(i)) {
            return fail(format!("seed {seed}: {} regions at p = 1e-9", cut.len()));
        }
    }
    pass("200 trees with <= 12 leaves and |ll| <= 0.8: 1 region at p = 1-1e-9, S regions at p = 1e-9")
}

fn all_pairs_ri(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            agree += usize::from((a[i] == a[j]) == (b[i] == b[j]));
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

fn metric_oracles() -> Outcome {
    let seg = |w: usize, l: &[u32]| Segmentation::from_raw_labels(w, l.len() / w, l).unwrap();
    let halves = seg(4, &[0, 0, 1, 1]);
    let whole = seg(4, &[0, 0, 0, 0]);
    let swapped = seg(4, &[0, 1, 0, 1]);
    if covering(&halves, &whole).unwrap() != 0.5 {
        return fail("4-pixel covering is not 0.5");
    }
    if rand_index(&halves, &swapped).unwrap() != 1.0 / 3.0 {
        return fail("pair-swap RI is not 1/3");
    }
    for n in [2usize, 4, 9, 16] {
        let one = seg(n, &vec![0; n]);
        let singles = seg(n, &(0..n as u32).collect::<Vec<_>>());
        if (vi(&one, &singles).unwrap() - (n as f64).ln()).abs() > 1e-12 {
            return fail(format!("VI one-region vs singletons at N = {n}"));
        }
    }
    let mut r = StdRng::seed_from_u64(5);
    for _ in 0..500 {
        let n = r.random_range(1..=20);
        let a: Vec<u32> = (0..n).map(|_| r.random_range(0..4)).collect();
        let b: Vec<u32> = (0..n).map(|_| r.random_range(0..6)).collect();
        let gts = AnnotationSet::new("x", vec![seg(n, &b)]).unwrap();
        if pri(&seg(n, &a), &gts).unwrap() != all_pairs_ri(&a, &b) {
            return fail(format!("PRI differs from all pairs on {a:?} vs {b:?}"));
        }
    }
    pass("COV 0.5, RI 1/3, VI = ln N for N in {2,4,9,16}; PRI = all-pairs RI on 500 random maps")
}

fn coverage_mass() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..40 {
        let (tree, params, ll) = problem(2000 + seed, 40, 50.0);
        let mut r = StdRng::seed_from_u64(seed);
        let sizes: Vec<f64> = (0..tree.num_superpixels()).map(|_| r.random_range(1..500) as f64).collect();
        let total: f64 = sizes.iter().sum();
        let m = PosteriorTables::compute(&tree, &params, &ll).unwrap().node_marginals(&tree);
        let mass: f64 = tree
            .nodes()
            .iter()
            .map(|n| m.active[n.id] * n.superpixels.iter().map(|&s| sizes[s as usize]).sum::<f64>())
            .sum();
        worst = worst.max(((mass - total) / total).abs());
    }
    if worst < 1e-6 {
        pass(format!("40 trees up to 40 leaves, max relative error {worst:.1e}"))
    } else {
        fail(format!("max relative error {worst:e}"))
    }
}

fn scale_tuning() -> Outcome {
    let images: Vec<TuningImage> = two_scale_dataset(3, 21)
        .unwrap()
        .iter()
        .map(|s| {
            let ann = AnnotationSet::new(s.id.clone(), vec![s.annotation().clone()]).unwrap();
            TuningImage::new(&s.data.image, s.data.tree.clone(), s.data.superpixels.clone(), ann, 1e-6).unwrap()
        })
        .collect();
    let anns: Vec<AnnotationSet> = images.iter().map(|t| t.annotations.clone()).collect();
    let split = scale_split(&anns);
    let grid = ParamGrid::new(ParamGrid::default_p_values(), vec![TWO_SCALE_LAMBDA], None).unwrap();
    let m = cross_scale_grid_search(&images, &split, &grid, Metric::Covering).unwrap();
    let p = |t| m.row(t).model.as_ref().map(|g| g.best_p);
    let (Some(pc), Some(pf)) = (p(TrainSet::Coarse), p(TrainSet::Fine)) else {
        return fail("coarse or fine row skipped");
    };
    let mut dominant = true;
    for test in [Scale::Coarse, Scale::Fine] {
        let diag = m.score(TrainSet::from(test), test).unwrap();
        for train in [TrainSet::Coarse, TrainSet::Fine] {
            if train != TrainSet::from(test) && diag <= m.score(train, test).unwrap() {
                dominant = false;
            }
        }
    }
    let detail = format!(
        "p_coarse {pc:.4} > p_fine {pf:.4}; coarse col [{:.3}, {:.3}], fine col [{:.3}, {:.3}]; medium bucket {}",
        m.score(TrainSet::Coarse, Scale::Coarse).unwrap(),
        m.score(TrainSet::Fine, Scale::Coarse).unwrap(),
        m.score(TrainSet::Coarse, Scale::Fine).unwrap(),
        m.score(TrainSet::Fine, Scale::Fine).unwrap(),
        if m.row(TrainSet::Medium).model.is_none() { "skipped" } else { "trained" },
    );
    if pc > pf && dominant {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn directional_p_sweep() -> Outcome {
    let mut checked = 0;
    for seed in 0..6u64 {
        let options = if seed % 2 == 0 { HierarchyOptions::coarse_scene() } else { HierarchyOptions::fine_scene() };
        let scene = hierarchy_image(&options, seed).unwrap();
        let sp = color_superpixels(&scene.image, 120, seed).unwrap();
        let tree = build_tree_agglomerative(&scene.image, &sp).unwrap();
        for lambda in [2e-4, 2e-3, 2e-2] {
            let cfg = LikelihoodConfig::gaussian(lambda, 1e-6).unwrap();
            let ll = region_loglik_table(&tree, &scene.image, &sp, None, &cfg).unwrap();
            let counts: Vec<usize> = [0.90, 0.99, 1.0 - 1e-9]
                .iter()
                .map(|&p| {
                    let params = ModelParams::global(&tree, p).unwrap();
                    let (cut, _) = map_cut(&tree, &params, &ll).unwrap();
                    cut_to_segmentation(&cut, &tree, &sp).unwrap().num_regions()
                })
                .collect();
            if counts.windows(2).any(|w| w[0] < w[1]) {
                return fail(format!("seed {seed}, lambda {lambda}: {counts:?}"));
            }
            checked += 1;
        }
    }
    pass(format!("{checked} image/lambda pairs, region counts non-increasing over p in {{0.90, 0.99, 1-1e-9}}"))
}

fn end_to_end() -> Outcome {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let scene = write_scene(d, "scene", &HierarchyOptions::default(), 77);
    let out = d.join("out");
    let pipeline = || {
        let tree = treecut(&[
            "tree", "--image", &s(&scene.image), "--superpixels", "slic:150", "--seed", "3",
            "--out-dir", &s(&out),
        ]);
        let seg = treecut(&[
            "segment", "--image", &s(&scene.image), "--tree", &s(&out.join("tree.json")),
            "--superpixels", &s(&out.join("superpixels.pgm")), "--p", "0.9", "--lambda", "0.002",
            "--out-dir", &s(&out),
        ]);
        let eval = treecut(&[
            "eval", "--segmentation", &s(&out.join("segmentation.pgm")),
            "--annotations", &s(&scene.coarse), &s(&scene.medium), "--out-dir", &s(&out),
        ]);
        [tree, seg, eval]
    };
    let first = pipeline();
    if let Some(r) = first.iter().find(|r| r.code != 0) {
        return fail(format!("exit {}: {}", r.code, r.stderr));
    }
    let a = snapshot(&out);
    let second = pipeline();
    let b = snapshot(&out);
    let same_stdout = first.iter().zip(&second).all(|(x, y)| x.stdout == y.stdout);
    if a == b && same_stdout {
        pass(format!("{} artifacts byte-identical across two runs", a.len()))
    } else {
        let differ: Vec<_> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
        fail(format!("differing artifacts {differ:?}, stdout identical: {same_stdout}"))
    }
}

#[test]
fn acceptance() {
    let _ = writeln!(std::io::stdout());
    let mut report = Report { failures: Vec::new() };
    let secs = |s| Some(Duration::from_secs(s));
    report.check("prior normalization", secs(5), normalization);
    report.check("oracle equivalence", secs(10), oracle_equivalence);
    report.check("sampler exactness", secs(10), sampler);
    report.check("limit behavior, tables in [-1e3, 1e3]", None, limit_literal);
    report.check("limit behavior, bounded tables", None, limit_bounded);
    report.check("metric oracles", None, metric_oracles);
    report.check("coverage-mass identity", None, coverage_mass);
    report.check("scale tuning, synthetic", secs(60), scale_tuning);
    report.check("directional p sweep", None, directional_p_sweep);
    report.check("end-to-end determinism", secs(5), end_to_end);
    assert!(report.failures.is_empty(), "failed: {:?}", report.failures);
}
