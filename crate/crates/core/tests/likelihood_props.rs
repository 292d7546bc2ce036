mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use treecut_core::likelihood::{
    aggregate_stats, gaussian_loglik, gt_loglik, node_stats, LabelCounts, RegionStats,
};
use treecut_core::{
    build_tree_agglomerative, grid_superpixels, region_loglik_table, Image, LikelihoodConfig,
    Segmentation,
};

fn random_pixels(seed: u64, n: usize) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| std::array::from_fn(|_| r.random::<f64>()))
        .collect()
}

fn inverse3(a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 6]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3 + i] = 1.0;
    }
    for c in 0..3 {
        let pivot = (c..3).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, pivot);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..3 {
            if r != c {
                let f = m[r][c];
                for k in 0..6 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][3 + j]))
}

fn det3(a: [[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Two-pass mean and MLE covariance.
fn moments(pixels: &[[f64; 3]]) -> ([f64; 3], [[f64; 3]; 3]) {
    let n = pixels.len() as f64;
    let mean: [f64; 3] = std::array::from_fn(|c| pixels.iter().map(|p| p[c]).sum::<f64>() / n);
    let cov = std::array::from_fn(|i| {
        std::array::from_fn(|j| pixels.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / n)
    });
    (mean, cov)
}

/// Σ over pixels of ln N(y; mean, cov).
fn summed_density(pixels: &[[f64; 3]], mean: [f64; 3], cov: [[f64; 3]; 3]) -> f64 {
    let inv = inverse3(cov);
    let log_norm = 3.0 * (2.0 * std::f64::consts::PI).ln() + det3(cov).ln();
    pixels
        .iter()
        .map(|y| {
            let d: [f64; 3] = std::array::from_fn(|c| y[c] - mean[c]);
            let q: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| d[i] * inv[i][j] * d[j]).sum();
            -0.5 * (log_norm + q)
        })
        .sum()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn closed_form_equals_summed_densities_at_the_mle() {
    for seed in 0..20 {
        let pixels = random_pixels(seed, 50);
        let stats = RegionStats::from_pixels(&pixels);
        let (mean, cov) = moments(&pixels);
        let exact = summed_density(&pixels, mean, cov);
        let cfg = LikelihoodConfig::gaussian(1.0, 0.0).unwrap();
        assert!(rel_close(gaussian_loglik(&stats, &cfg).unwrap(), exact, 1e-9));
    }
}

#[test]
fn ridge_shifts_the_closed_form_by_the_trace_term() {
    for (seed, eps) in [(1, 1e-6), (2, 1e-3), (3, 0.05)] {
        let pixels = random_pixels(seed, 40);
        let stats = RegionStats::from_pixels(&pixels);
        let (mean, cov) = moments(&pixels);
        let mut reg = cov;
        for (i, row) in reg.iter_mut().enumerate() {
            row[i] += eps;
        }
        let inv = inverse3(reg);
        let trace: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| inv[i][j] * cov[j][i]).sum();
        let n = pixels.len() as f64;
        let expected = summed_density(&pixels, mean, reg) - 0.5 * n * (3.0 - trace);
        let cfg = LikelihoodConfig::gaussian(1.0, eps).unwrap();
        assert!(rel_close(gaussian_loglik(&stats, &cfg).unwrap(), expected, 1e-9));
    }
}

#[test]
fn constant_region_example() {
    let stats = RegionStats::from_pixels(&[[0.3, 0.3, 0.3]; 4]);
    let got = gaussian_loglik(&stats, &LikelihoodConfig::default()).unwrap();
    let expected = -2.0 * (3.0 * (2.0 * std::f64::consts::PI).ln() + 3.0 * (1e-6f64).ln() + 3.0);
    assert!(rel_close(got, expected, 1e-9), "{got} vs {expected}");
}

#[test]
fn aggregation_matches_direct_recomputation() {
    let mut r = rng(8);
    let pixels: Vec<[f64; 3]> = (0..20 * 14).map(|_| std::array::from_fn(|_| r.random::<f64>())).collect();
    let image = Image::new(20, 14, pixels).unwrap();
    let sp = grid_superpixels(&image, 3).unwrap();
    let tree = build_tree_agglomerative(&image, &sp).unwrap();
    let stats = node_stats(&tree, &image, &sp);
    let table = region_loglik_table(&tree, &image, &sp, None, &LikelihoodConfig::default()).unwrap();
    assert_eq!(table.len(), 2 * sp.count() - 1);
    for node in tree.nodes() {
        let own: Vec<[f64; 3]> = sp
            .labels()
            .iter()
            .zip(image.pixels())
            .filter(|(l, _)| node.superpixels.binary_search(l).is_ok())
            .map(|(_, p)| *p)
            .collect();
        let direct = RegionStats::from_pixels(&own);
        assert_eq!(stats[node.id].n, direct.n);
        for i in 0..3 {
            assert!(rel_close(stats[node.id].sum[i], direct.sum[i], 1e-12));
            for j in 0..3 {
                assert!(rel_close(stats[node.id].outer_sum[i][j], direct.outer_sum[i][j], 1e-12));
            }
        }
        let direct_ll = gaussian_loglik(&direct, &LikelihoodConfig::default()).unwrap();
        assert!(rel_close(table[node.id], direct_ll, 1e-9));
    }
}

#[test]
fn splitting_a_bimodal_region_gains_likelihood() {
    let mut r = rng(3);
    let pixels: Vec<[f64; 3]> = (0..64)
        .map(|i| if i % 8 < 4 { [0.1, 0.2, 0.3] } else { [0.8, 0.7, 0.9] })
        .map(|p| p.map(|v| v + r.random_range(-0.01..0.01)))
        .collect();
    let image = Image::new(8, 8, pixels).unwrap();
    let sp = treecut_core::SuperpixelMap::new(8, 8, (0..64).map(|i| u32::from(i % 8 >= 4)).collect()).unwrap();
    let tree = treecut_core::RegionTree::from_children(2, vec![vec![], vec![], vec![0, 1]]).unwrap();
    let ll = region_loglik_table(&tree, &image, &sp, None, &LikelihoodConfig::default()).unwrap();
    assert!(ll[0] + ll[1] > ll[2]);
}

#[test]
fn ground_truth_examples() {
    let cfg = LikelihoodConfig::ground_truth(1.0).unwrap();
    assert_eq!(gt_loglik(&LabelCounts::new(vec![0, 7, 0]), &cfg).unwrap(), 0.0);
    assert!((gt_loglik(&LabelCounts::new(vec![2, 2]), &cfg).unwrap() - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    let v = 3.0 * 0.75f64.ln() + 0.25f64.ln();
    assert!((gt_loglik(&LabelCounts::new(vec![3, 1]), &cfg).unwrap() - v).abs() < 1e-12);
    assert!(gt_loglik(&LabelCounts::new(vec![0, 0]), &cfg).is_err());
}

#[test]
fn ground_truth_table_on_a_tree() {
    let image = Image::new(4, 1, vec![[0.5; 3]; 4]).unwrap();
    let sp = grid_superpixels(&image, 1).unwrap();
    let tree = treecut_core::RegionTree::from_children(
        6,
        vec![vec![], vec![], vec![], vec![], vec![0, 1], vec![2, 3], vec![4, 5]],
    )
    .unwrap();
    let gt = Segmentation::new(4, 1, vec![0, 0, 0, 1]).unwrap();
    let cfg = LikelihoodConfig::ground_truth(1.0).unwrap();
    let ll = region_loglik_table(&tree, &image, &sp, Some(&gt), &cfg).unwrap();
    assert_eq!(&ll[..5], &[0.0; 5]);
    assert!((ll[5] - 2.0 * 0.5f64.ln()).abs() < 1e-12);
    assert!((ll[6] - (3.0 * 0.75f64.ln() + 0.25f64.ln())).abs() < 1e-12);
    assert!(region_loglik_table(&tree, &image, &sp, None, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_is_order_independent(seed in any::<u64>(), n in 1usize..40, split in 0usize..40) {
        let pixels = random_pixels(seed, n);
        let split = split.min(n);
        let parts: Vec<RegionStats> = pixels.chunks(split.max(1)).map(RegionStats::from_pixels).collect();
        let forward = aggregate_stats(&parts).unwrap();
        let mut rev = parts.clone();
        rev.reverse();
        let backward = aggregate_stats(&rev).unwrap();
        prop_assert_eq!(forward.n, backward.n);
        for i in 0..3 {
            prop_assert!(rel_close(forward.sum[i], backward.sum[i], 1e-12));
            for j in 0..3 {
                prop_assert!(rel_close(forward.outer_sum[i][j], backward.outer_sum[i][j], 1e-12));
            }
        }
        let single = aggregate_stats(&[forward]).unwrap();
        prop_assert_eq!(single, forward);
    }

    #[test]
    fn lambda_scales_exactly(seed in any::<u64>(), n in 1usize..30, lambda in 1e-6f64..100.0) {
        let stats = RegionStats::from_pixels(&random_pixels(seed, n));
        let one = gaussian_loglik(&stats, &LikelihoodConfig::gaussian(1.0, 1e-6).unwrap()).unwrap();
        let scaled = gaussian_loglik(&stats, &LikelihoodConfig::gaussian(lambda, 1e-6).unwrap()).unwrap();
        prop_assert_eq!(scaled, lambda * one);
        let counts = LabelCounts::new(vec![n as u64, (seed % 5), 3]);
        let one = gt_loglik(&counts, &LikelihoodConfig::ground_truth(1.0).unwrap()).unwrap();
        let scaled = gt_loglik(&counts, &LikelihoodConfig::ground_truth(lambda).unwrap()).unwrap();
        prop_assert_eq!(scaled, lambda * one);
    }

    #[test]
    fn merging_identical_regions_is_additive(seed in any::<u64>(), n in 2usize..30) {
        let pixels = random_pixels(seed, n);
        let a = RegionStats::from_pixels(&pixels);
        let merged = aggregate_stats(&[a, a]).unwrap();
        let cfg = LikelihoodConfig::default();
        let parts = 2.0 * gaussian_loglik(&a, &cfg).unwrap();
        let whole = gaussian_loglik(&merged, &cfg).unwrap();
        prop_assert!(rel_close(whole, parts, 1e-9));
    }

    #[test]
    fn ground_truth_loglik_is_nonpositive(counts in proptest::collection::vec(0u64..50, 1..6)) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let pure = counts.iter().filter(|&&c| c > 0).count() == 1;
        let v = gt_loglik(&LabelCounts::new(counts), &LikelihoodConfig::ground_truth(1.0).unwrap()).unwrap();
        prop_assert!(v <= 0.0);
        prop_assert_eq!(v == 0.0, pure);
    }
}
