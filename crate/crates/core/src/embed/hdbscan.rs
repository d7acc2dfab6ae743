//! HDBSCAN: core distances, mutual reachability, Prim MST, condensed tree
//! and excess-of-mass cluster selection.
//!
//! MST edges of equal weight are merged in one step, so a level where
//! several components join at once becomes one n-ary split. The hierarchy
//! then depends only on the distance values, not on which of several
//! equally short edges Prim happened to pick, which keeps the partition
//! invariant under reordering of the input. The root is a selection
//! candidate, so a dataset with no stable split is one cluster rather than
//! all noise.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Metric;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("{points} points is fewer than min_cluster_size {min_cluster_size}")]
    TooFewPoints {
        points: usize,
        min_cluster_size: usize,
    },
    #[error("invalid cluster config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub metric: Metric,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            min_cluster_size: 10,
            min_samples: 5,
            metric: Metric::Euclidean,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_cluster_size < 2 {
            return Err(ClusterError::InvalidConfig(
                "min_cluster_size must be >= 2".into(),
            ));
        }
        if self.min_samples < 1 {
            return Err(ClusterError::InvalidConfig(
                "min_samples must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Distance to the `min_samples`-th nearest point, counting the point itself.
pub fn core_distances(x: &Array2<f64>, min_samples: usize, metric: Metric) -> Vec<f64> {
    let m = x.nrows();
    let k = min_samples.clamp(1, m.max(1));
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..m)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        metric.distance(x.row(i), x.row(j))
                    }
                })
                .collect();
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

/// Prim's MST over mutual reachability `max(core_a, core_b, d(a, b))`.
/// Starts at point 0; among equal candidates the lowest index is taken.
pub fn mutual_reachability_mst(
    x: &Array2<f64>,
    core: &[f64],
    metric: Metric,
) -> Vec<(usize, usize, f64)> {
    let m = x.nrows();
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut from = vec![0usize; m];
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        let row = x.row(current);
        let updates: Vec<(usize, f64)> = (0..m)
            .into_par_iter()
            .filter(|&j| !in_tree[j])
            .map(|j| {
                let d = metric
                    .distance(row, x.row(j))
                    .max(core[current])
                    .max(core[j]);
                (j, d)
            })
            .collect();
        for (j, d) in updates {
            if d < best[j] {
                best[j] = d;
                from[j] = current;
            }
        }
        let mut next = usize::MAX;
        for j in 0..m {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, best[next]));
        current = next;
    }
    edges
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        lo
    }
}

/// Dendrogram node; ids `0..m` are the points, internal nodes follow.
#[derive(Debug, Clone)]
struct Node {
    children: Vec<usize>,
    weight: f64,
    size: usize,
}

fn dendrogram(m: usize, mut edges: Vec<(usize, usize, f64)>) -> Vec<Node> {
    edges.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then(a.0.min(a.1).cmp(&b.0.min(b.1)))
            .then(a.0.max(a.1).cmp(&b.0.max(b.1)))
    });
    let mut nodes: Vec<Node> = (0..m)
        .map(|_| Node {
            children: Vec::new(),
            weight: 0.0,
            size: 1,
        })
        .collect();
    let mut points = Dsu::new(m);
    let mut node_of: Vec<usize> = (0..m).collect();
    let mut start = 0;
    while start < edges.len() {
        let w = edges[start].2;
        let end = start + edges[start..].iter().take_while(|e| e.2 == w).count();
        // group the components joined at this level
        let mut level = Dsu::new(m);
        let mut touched = Vec::new();
        for &(a, b, _) in &edges[start..end] {
            let (ra, rb) = (points.find(a), points.find(b));
            touched.push(ra);
            touched.push(rb);
            level.union(ra, rb);
        }
        touched.sort_unstable();
        touched.dedup();
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for &r in &touched {
            let g = level.find(r);
            match groups.iter_mut().find(|(k, _)| *k == g) {
                Some((_, members)) => members.push(r),
                None => groups.push((g, vec![r])),
            }
        }
        for (_, members) in groups {
            let children: Vec<usize> = members.iter().map(|&r| node_of[r]).collect();
            let size = children.iter().map(|&c| nodes[c].size).sum();
            let id = nodes.len();
            nodes.push(Node {
                children,
                weight: w,
                size,
            });
            let mut root = members[0];
            for &r in &members[1..] {
                root = points.union(root, r);
            }
            node_of[root] = id;
        }
        start = end;
    }
    nodes
}

fn leaves(nodes: &[Node], root: usize, out: &mut Vec<usize>) {
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if nodes[n].children.is_empty() {
            out.push(n);
        } else {
            stack.extend(&nodes[n].children);
        }
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    parent: Option<usize>,
    birth: f64,
    children: Vec<usize>,
    /// Points that leave this cluster directly.
    fallen: Vec<usize>,
    /// Terms of the stability sum.
    terms: Vec<f64>,
}

fn lambda(w: f64) -> f64 {
    if w > 0.0 {
        1.0 / w
    } else {
        f64::INFINITY
    }
}

fn order_free_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

fn condense(nodes: &[Node], root: usize, min_cluster_size: usize) -> Vec<Cluster> {
    let mut clusters = vec![Cluster {
        parent: None,
        birth: 0.0,
        children: Vec::new(),
        fallen: Vec::new(),
        terms: Vec::new(),
    }];
    let mut stack = vec![(root, 0usize)];
    let mut buf = Vec::new();
    while let Some((n, c)) = stack.pop() {
        let node = &nodes[n];
        if node.children.is_empty() {
            clusters[c].fallen.push(n);
            let term = f64::INFINITY - clusters[c].birth;
            clusters[c].terms.push(term);
            continue;
        }
        let lam = lambda(node.weight);
        let big: Vec<usize> = node
            .children
            .iter()
            .copied()
            .filter(|&ch| nodes[ch].size >= min_cluster_size)
            .collect();
        for &ch in &node.children {
            let is_big = nodes[ch].size >= min_cluster_size;
            if is_big && big.len() >= 2 {
                let id = clusters.len();
                let birth = clusters[c].birth;
                clusters[c].children.push(id);
                clusters[c]
                    .terms
                    .push(nodes[ch].size as f64 * (lam - birth));
                clusters.push(Cluster {
                    parent: Some(c),
                    birth: lam,
                    children: Vec::new(),
                    fallen: Vec::new(),
                    terms: Vec::new(),
                });
                stack.push((ch, id));
            } else if is_big {
                stack.push((ch, c));
            } else {
                buf.clear();
                leaves(nodes, ch, &mut buf);
                let term = lam - clusters[c].birth;
                clusters[c].fallen.extend(&buf);
                clusters[c]
                    .terms
                    .extend(std::iter::repeat_n(term, buf.len()));
            }
        }
    }
    clusters
}

fn select(clusters: &[Cluster]) -> Vec<bool> {
    let n = clusters.len();
    let mut selected = vec![false; n];
    let mut subtree = vec![0.0; n];
    for c in (0..n).rev() {
        let own = order_free_sum(clusters[c].terms.clone());
        if clusters[c].children.is_empty() {
            selected[c] = true;
            subtree[c] = own;
            continue;
        }
        let below = order_free_sum(clusters[c].children.iter().map(|&ch| subtree[ch]).collect());
        if below > own {
            subtree[c] = below;
        } else {
            subtree[c] = own;
            selected[c] = true;
        }
    }
    // children ids are always larger than their parent's
    for c in 0..n {
        if let Some(p) = clusters[c].parent {
            if selected[p] || covered(clusters, &selected, p) {
                selected[c] = false;
            }
        }
    }
    selected
}

fn covered(clusters: &[Cluster], selected: &[bool], mut c: usize) -> bool {
    while let Some(p) = clusters[c].parent {
        if selected[p] {
            return true;
        }
        c = p;
    }
    false
}

/// Cluster label per point (`None` = noise). Labels are numbered by the
/// smallest point index in each cluster.
pub fn hdbscan(x: &Array2<f64>, cfg: &ClusterConfig) -> Result<Vec<Option<usize>>, ClusterError> {
    cfg.validate()?;
    let m = x.nrows();
    if m < cfg.min_cluster_size {
        return Err(ClusterError::TooFewPoints {
            points: m,
            min_cluster_size: cfg.min_cluster_size,
        });
    }
    let core = core_distances(x, cfg.min_samples, cfg.metric);
    let mst = mutual_reachability_mst(x, &core, cfg.metric);
    let nodes = dendrogram(m, mst);
    let clusters = condense(&nodes, nodes.len() - 1, cfg.min_cluster_size);
    let selected = select(&clusters);

    let mut owner: Vec<Option<usize>> = vec![None; clusters.len()];
    for c in 0..clusters.len() {
        owner[c] = if selected[c] {
            Some(c)
        } else {
            clusters[c].parent.and_then(|p| owner[p])
        };
    }
    let mut raw = vec![None; m];
    for (c, cl) in clusters.iter().enumerate() {
        for &p in &cl.fallen {
            raw[p] = owner[c];
        }
    }
    Ok(renumber(&raw))
}

/// Relabels so clusters are numbered in order of their first point.
pub fn renumber(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            l.map(|c| {
                let next = map.len();
                *map.entry(c).or_insert(next)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut x = Array2::zeros((centers.len() * per, 2));
        for (c, center) in centers.iter().enumerate() {
            for i in 0..per {
                for d in 0..2 {
                    x[[c * per + i, d]] = center[d] + noise.sample(&mut rng);
                }
            }
        }
        x
    }

    #[test]
    fn two_blobs() {
        let x = blobs(&[[0.0, 0.0], [50.0, 50.0]], 50, 1.0, 4);
        let labels = hdbscan(&x, &ClusterConfig::default()).unwrap();
        assert!(labels.iter().all(Option::is_some));
        assert!(labels[..50].iter().all(|&l| l == Some(0)));
        assert!(labels[50..].iter().all(|&l| l == Some(1)));
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let x = Array2::from_elem((20, 3), 1.5);
        let labels = hdbscan(&x, &ClusterConfig::default()).unwrap();
        assert!(labels.iter().all(|&l| l == Some(0)));
    }

    #[test]
    fn too_few_points() {
        let x = Array2::zeros((5, 2));
        assert_eq!(
            hdbscan(&x, &ClusterConfig::default()),
            Err(ClusterError::TooFewPoints {
                points: 5,
                min_cluster_size: 10
            })
        );
    }

    #[test]
    fn mst_spans_and_is_minimal_on_a_line() {
        let x = Array2::from_shape_fn((6, 1), |(i, _)| (i * i) as f64);
        let core = vec![0.0; 6];
        let mst = mutual_reachability_mst(&x, &core, Metric::Euclidean);
        let total: f64 = mst.iter().map(|e| e.2).sum();
        assert_eq!(mst.len(), 5);
        assert_eq!(total, 25.0);
    }

    #[test]
    fn equal_weights_merge_in_one_node() {
        // three pairs joined by edges of the same length
        let edges = vec![
            (0, 1, 1.0),
            (2, 3, 1.0),
            (4, 5, 1.0),
            (1, 2, 5.0),
            (3, 4, 5.0),
        ];
        let nodes = dendrogram(6, edges);
        let root = nodes.last().unwrap();
        assert_eq!(root.children.len(), 3);
        assert_eq!(root.size, 6);
    }

    #[test]
    fn renumber_by_first_point() {
        assert_eq!(
            renumber(&[Some(4), None, Some(2), Some(4)]),
            vec![Some(0), None, Some(1), Some(0)]
        );
    }
}
