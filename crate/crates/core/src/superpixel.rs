//! Superpixel sources: a deterministic grid tiling and a seeded
//! color/position k-means with connectivity repair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{connected_components, Image, SuperpixelMap};

/// Tiles the image with `cell`×`cell` blocks. The last row and column of
/// blocks absorb the remainder; ids run in row-major block order.
pub fn grid_superpixels(image: &Image, cell: usize) -> Result<SuperpixelMap> {
    let (w, h) = (image.width(), image.height());
    if cell == 0 || cell > w.min(h) {
        return Err(Error::invalid(format!(
            "cell size {cell} outside 1..={}",
            w.min(h)
        )));
    }
    let (nx, ny) = (w / cell, h / cell);
    let labels = (0..h)
        .flat_map(|y| {
            let cy = (y / cell).min(ny - 1);
            (0..w).map(move |x| (cy * nx + (x / cell).min(nx - 1)) as u32)
        })
        .collect();
    SuperpixelMap::new(w, h, labels)
}

/// Parameters of [`color_superpixels_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColorSuperpixelOptions {
    pub target_count: usize,
    pub seed: u64,
    /// Weight of the spatial term relative to RGB distance, per grid step.
    pub compactness: f64,
    pub iterations: usize,
}

impl ColorSuperpixelOptions {
    pub fn new(target_count: usize, seed: u64) -> Self {
        Self {
            target_count,
            seed,
            compactness: 0.1,
            iterations: 10,
        }
    }
}

/// Content-adaptive superpixels with default options.
pub fn color_superpixels(image: &Image, target_count: usize, seed: u64) -> Result<SuperpixelMap> {
    color_superpixels_with(image, &ColorSuperpixelOptions::new(target_count, seed))
}

#[derive(Clone, Copy)]
struct Center {
    color: [f64; 3],
    x: f64,
    y: f64,
}

pub fn color_superpixels_with(
    image: &Image,
    opts: &ColorSuperpixelOptions,
) -> Result<SuperpixelMap> {
    let (w, h) = (image.width(), image.height());
    let n = w * h;
    let k = opts.target_count;
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "target_count {k} outside 1..={n}"
        )));
    }
    if !(opts.compactness > 0.0) {
        return Err(Error::invalid("compactness must be positive"));
    }

    let nx = ((k as f64 * w as f64 / h as f64).sqrt().round() as usize).clamp(1, w);
    let ny = k.div_ceil(nx).clamp(1, h);
    let bounds = |i: usize, parts: usize, len: usize| (i * len / parts, (i + 1) * len / parts);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut centers = Vec::with_capacity(nx * ny);
    let mut assignment = vec![0u32; n];
    let (mut max_cw, mut max_ch) = (1, 1);
    for cy in 0..ny {
        let (y0, y1) = bounds(cy, ny, h);
        for cx in 0..nx {
            let (x0, x1) = bounds(cx, nx, w);
            max_cw = max_cw.max(x1 - x0);
            max_ch = max_ch.max(y1 - y0);
            let jitter = |lo: usize, hi: usize, rng: &mut ChaCha8Rng| {
                let mid = (lo + hi - 1) / 2;
                let r = (hi - lo) / 4;
                if r == 0 {
                    mid
                } else {
                    rng.random_range(mid - r..=mid + r)
                }
            };
            let sx = jitter(x0, x1, &mut rng);
            let sy = jitter(y0, y1, &mut rng);
            let id = centers.len() as u32;
            centers.push(Center {
                color: image.pixel(sx, sy),
                x: sx as f64,
                y: sy as f64,
            });
            for y in y0..y1 {
                for x in x0..x1 {
                    assignment[y * w + x] = id;
                }
            }
        }
    }

    let step = (n as f64 / k as f64).sqrt();
    let spatial = (opts.compactness / step).powi(2);
    let (rx, ry) = (2 * max_cw, 2 * max_ch);
    let mut best = vec![f64::INFINITY; n];
    for _ in 0..opts.iterations {
        best.fill(f64::INFINITY);
        for (id, c) in centers.iter().enumerate() {
            let (cx, cy) = (c.x.round() as usize, c.y.round() as usize);
            for y in cy.saturating_sub(ry)..(cy + ry + 1).min(h) {
                for x in cx.saturating_sub(rx)..(cx + rx + 1).min(w) {
                    let px = image.pixel(x, y);
                    let dc: f64 = (0..3).map(|ch| (px[ch] - c.color[ch]).powi(2)).sum();
                    let ds = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                    let d = dc + spatial * ds;
                    let i = y * w + x;
                    if d < best[i] {
                        best[i] = d;
                        assignment[i] = id as u32;
                    }
                }
            }
        }
        let mut acc = vec![([0.0; 3], 0.0, 0.0, 0usize); centers.len()];
        for (i, &a) in assignment.iter().enumerate() {
            let e = &mut acc[a as usize];
            let px = image.pixels()[i];
            for ch in 0..3 {
                e.0[ch] += px[ch];
            }
            e.1 += (i % w) as f64;
            e.2 += (i / w) as f64;
            e.3 += 1;
        }
        for (c, (color, sx, sy, cnt)) in centers.iter_mut().zip(acc) {
            if cnt > 0 {
                let m = cnt as f64;
                c.color = color.map(|v| v / m);
                c.x = sx / m;
                c.y = sy / m;
            }
        }
    }

    SuperpixelMap::new(w, h, enforce_connectivity(w, h, &assignment))
}

/// Keeps the largest 4-connected piece of every label and folds each other
/// piece into the neighbouring piece it shares the most boundary with.
/// Output ids are contiguous, numbered by row-major first appearance.
fn enforce_connectivity(w: usize, h: usize, labels: &[u32]) -> Vec<u32> {
    let comps = connected_components(w, h, labels);
    let nc = comps.count;
    let mut size = vec![0usize; nc];
    let mut label_of = vec![0u32; nc];
    for (i, &c) in comps.labels.iter().enumerate() {
        size[c as usize] += 1;
        label_of[c as usize] = labels[i];
    }
    // largest component per label; earliest wins ties
    let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut keeper = vec![usize::MAX; max_label + 1];
    for c in 0..nc {
        let l = label_of[c] as usize;
        if keeper[l] == usize::MAX || size[c] > size[keeper[l]] {
            keeper[l] = c;
        }
    }

    let mut boundary: Vec<std::collections::BTreeMap<usize, usize>> = vec![Default::default(); nc];
    for y in 0..h {
        for x in 0..w {
            let a = comps.labels[y * w + x] as usize;
            let mut touch = |j: usize| {
                let b = comps.labels[j] as usize;
                if a != b {
                    *boundary[a].entry(b).or_default() += 1;
                    *boundary[b].entry(a).or_default() += 1;
                }
            };
            if x + 1 < w {
                touch(y * w + x + 1);
            }
            if y + 1 < h {
                touch((y + 1) * w + x);
            }
        }
    }

    let mut parent: Vec<usize> = (0..nc).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for c in 0..nc {
        if keeper[label_of[c] as usize] == c {
            continue;
        }
        // BTreeMap iterates ascending, so max_by_key keeps the last maximum;
        // fold manually to prefer the smallest component on ties.
        let mut target = None;
        for (&b, &shared) in &boundary[c] {
            match target {
                Some((_, best)) if shared <= best => {}
                _ => target = Some((b, shared)),
            }
        }
        if let Some((b, _)) = target {
            let (ra, rb) = (find(&mut parent, c), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }

    let mut remap = vec![u32::MAX; nc];
    let mut next = 0u32;
    comps
        .labels
        .iter()
        .map(|&c| {
            let r = find(&mut parent, c as usize);
            if remap[r] == u32::MAX {
                remap[r] = next;
                next += 1;
            }
            remap[r]
        })
        .collect()
}
