use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use super::{RegionNode, RegionTree};
use crate::error::Result;
use crate::image::{Image, SuperpixelMap};

#[derive(Debug, Clone, Copy)]
struct Candidate {
    distance: f64,
    a: usize,
    b: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that BinaryHeap pops the smallest (distance, a, b).
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .distance
            .total_cmp(&self.distance)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

struct Region {
    sum: [f64; 3],
    count: f64,
    neighbours: BTreeSet<usize>,
    alive: bool,
}

impl Region {
    fn mean(&self) -> [f64; 3] {
        self.sum.map(|s| s / self.count)
    }
}

fn color_distance(a: &Region, b: &Region) -> f64 {
    let (ma, mb) = (a.mean(), b.mean());
    (0..3).map(|c| (ma[c] - mb[c]).powi(2)).sum::<f64>().sqrt()
}

/// Binary region tree from greedy merging of 4-adjacent regions with the
/// closest mean colors. Ties resolve on `(min id, max id)`. Leaf `i` governs
/// superpixel `i`; merges create ids `S, S+1, ...` so the root is `2S-2`.
///
/// Each internal node records `ucm_weight = max(merge distance, children's
/// weights)`, which keeps weights monotone towards the root.
pub fn build_tree_agglomerative(image: &Image, sp: &SuperpixelMap) -> Result<RegionTree> {
    sp.check_matches(image)?;
    let s = sp.count();
    let w = sp.width();
    let mut regions: Vec<Region> = (0..s)
        .map(|_| Region {
            sum: [0.0; 3],
            count: 0.0,
            neighbours: BTreeSet::new(),
            alive: true,
        })
        .collect();
    for (i, (&l, px)) in sp.labels().iter().zip(image.pixels()).enumerate() {
        let r = &mut regions[l as usize];
        for c in 0..3 {
            r.sum[c] += px[c];
        }
        r.count += 1.0;
        let (x, y) = (i % w, i / w);
        let mut link = |j: usize| {
            let m = sp.labels()[j];
            if m != l {
                regions[l as usize].neighbours.insert(m as usize);
                regions[m as usize].neighbours.insert(l as usize);
            }
        };
        if x + 1 < w {
            link(i + 1);
        }
        if y + 1 < sp.height() {
            link(i + w);
        }
    }

    let mut nodes: Vec<RegionNode> = (0..s)
        .map(|i| RegionNode {
            id: i,
            parent: None,
            children: Vec::new(),
            superpixels: vec![i as u32],
            ucm_weight: None,
        })
        .collect();

    let mut heap = BinaryHeap::new();
    for a in 0..s {
        for &b in regions[a].neighbours.range(a + 1..) {
            heap.push(Candidate {
                distance: color_distance(&regions[a], &regions[b]),
                a,
                b,
            });
        }
    }

    let mut alive = s;
    while alive > 1 {
        let Some(Candidate { distance, a, b }) = heap.pop() else {
            // disconnected adjacency graph: allow any pair of survivors
            let live: Vec<usize> = (0..regions.len()).filter(|&r| regions[r].alive).collect();
            for (i, &a) in live.iter().enumerate() {
                for &b in &live[i + 1..] {
                    heap.push(Candidate {
                        distance: color_distance(&regions[a], &regions[b]),
                        a,
                        b,
                    });
                }
            }
            continue;
        };
        if !regions[a].alive || !regions[b].alive {
            continue;
        }
        let id = regions.len();
        regions[a].alive = false;
        regions[b].alive = false;
        let mut neighbours: BTreeSet<usize> = regions[a]
            .neighbours
            .union(&regions[b].neighbours)
            .copied()
            .filter(|&r| r != a && r != b && regions[r].alive)
            .collect();
        let mut sum = regions[a].sum;
        for c in 0..3 {
            sum[c] += regions[b].sum[c];
        }
        let merged = Region {
            sum,
            count: regions[a].count + regions[b].count,
            neighbours: BTreeSet::new(),
            alive: true,
        };
        for &r in &neighbours {
            regions[r].neighbours.insert(id);
            heap.push(Candidate {
                distance: color_distance(&regions[r], &merged),
                a: r,
                b: id,
            });
        }
        regions.push(Region {
            neighbours: std::mem::take(&mut neighbours),
            ..merged
        });

        let weight = [a, b]
            .iter()
            .filter_map(|&c| nodes[c].ucm_weight)
            .fold(distance, f64::max);
        let mut superpixels = nodes[a].superpixels.clone();
        superpixels.extend_from_slice(&nodes[b].superpixels);
        superpixels.sort_unstable();
        nodes[a].parent = Some(id);
        nodes[b].parent = Some(id);
        nodes.push(RegionNode {
            id,
            parent: None,
            children: vec![a.min(b), a.max(b)],
            superpixels,
            ucm_weight: Some(weight),
        });
        alive -= 1;
    }

    let root = nodes.len() - 1;
    RegionTree::from_nodes(root, nodes)
}
