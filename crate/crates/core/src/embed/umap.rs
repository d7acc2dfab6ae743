//! UMAP layout: exact k-NN graph, per-point bandwidth calibration, fuzzy
//! union, then seeded cross-entropy SGD with negative sampling.
//!
//! Single-threaded SGD so a fixed seed reproduces bit-identical output.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::pca::Pca;
use super::Metric;

#[derive(Debug, Clone, PartialEq)]
pub struct UmapParams {
    pub n_components: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub n_epochs: usize,
    pub learning_rate: f64,
    pub negative_sample_rate: usize,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for UmapParams {
    fn default() -> Self {
        Self {
            n_components: 5,
            n_neighbors: 10,
            min_dist: 0.1,
            spread: 1.0,
            n_epochs: 200,
            learning_rate: 1.0,
            negative_sample_rate: 5,
            metric: Metric::Cosine,
            seed: 42,
        }
    }
}

/// `k` nearest neighbours of every point, the point itself first, then
/// others by `(distance, index)`.
pub fn knn(x: &Array2<f64>, k: usize, metric: Metric) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let m = x.nrows();
    let k = k.min(m);
    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| (metric.distance(x.row(i), x.row(j)), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut idx = vec![i];
            let mut dist = vec![0.0];
            for &(d, j) in cand.iter().take(k - 1) {
                idx.push(j);
                dist.push(d);
            }
            (idx, dist)
        })
        .collect();
    rows.into_iter().unzip()
}

/// Per-point `(rho, sigma)`: `rho` is the nearest non-zero neighbour
/// distance and `sigma` solves `sum_j exp(-(d_j - rho)/sigma) = log2(k)`.
pub fn smooth_knn_dist(dists: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
    const MIN_K_DIST_SCALE: f64 = 1e-3;
    const TOLERANCE: f64 = 1e-5;
    let target = (k as f64).log2();
    let all_mean = {
        let n: usize = dists.iter().map(Vec::len).sum();
        dists.iter().flatten().sum::<f64>() / n.max(1) as f64
    };
    dists
        .iter()
        .map(|row| {
            let rho = row.iter().copied().find(|&d| d > 0.0).unwrap_or(0.0);
            let (mut lo, mut hi, mut mid) = (0.0, f64::INFINITY, 1.0);
            for _ in 0..64 {
                let psum: f64 = row[1..]
                    .iter()
                    .map(|&d| {
                        let e = d - rho;
                        if e > 0.0 {
                            (-e / mid).exp()
                        } else {
                            1.0
                        }
                    })
                    .sum();
                if (psum - target).abs() < TOLERANCE {
                    break;
                }
                if psum > target {
                    hi = mid;
                    mid = 0.5 * (lo + hi);
                } else {
                    lo = mid;
                    mid = if hi == f64::INFINITY {
                        mid * 2.0
                    } else {
                        0.5 * (lo + hi)
                    };
                }
            }
            let row_mean = row.iter().sum::<f64>() / row.len() as f64;
            let floor = if rho > 0.0 { row_mean } else { all_mean } * MIN_K_DIST_SCALE;
            (rho, mid.max(floor))
        })
        .unzip()
}

/// Symmetric fuzzy graph as directed edges `(head, tail, weight)` in
/// `(head, tail)` order; both directions are present.
pub fn fuzzy_graph(
    idx: &[Vec<usize>],
    dists: &[Vec<f64>],
    rho: &[f64],
    sigma: &[f64],
) -> Vec<(usize, usize, f64)> {
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, (row_idx, row_d)) in idx.iter().zip(dists).enumerate() {
        for (&j, &d) in row_idx.iter().zip(row_d).skip(1) {
            let e = d - rho[i];
            let w = if e > 0.0 { (-e / sigma[i]).exp() } else { 1.0 };
            directed.insert((i, j), w);
        }
    }
    let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &w) in &directed {
        let back = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let u = w + back - w * back;
        sym.insert((i, j), u);
        sym.insert((j, i), u);
    }
    sym.into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|((i, j), w)| (i, j, w))
        .collect()
}

/// Fits `1 / (1 + a x^(2b))` to the offset-exponential target curve by
/// Levenberg-Marquardt least squares over 300 points on `[0, 3 spread]`.
pub fn find_ab_params(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x < min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    let cost = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };
    let (mut a, mut b) = (1.0, 1.0);
    let mut lambda = 1e-3;
    let mut current = cost(a, b);
    for _ in 0..500 {
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (&x, &y) in xs.iter().zip(&ys) {
            let u = if x > 0.0 { x.powf(2.0 * b) } else { 0.0 };
            let denom = 1.0 + a * u;
            let r = 1.0 / denom - y;
            let ja = -u / (denom * denom);
            let jb = if x > 0.0 {
                -a * u * 2.0 * x.ln() / (denom * denom)
            } else {
                0.0
            };
            let j = [ja, jb];
            for p in 0..2 {
                jtr[p] += j[p] * r;
                for q in 0..2 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda);
            let m01 = jtj[0][1];
            let det = m00 * m11 - m01 * m01;
            let da = -(m11 * jtr[0] - m01 * jtr[1]) / det;
            let db = -(m00 * jtr[1] - m01 * jtr[0]) / det;
            let next = cost(a + da, b + db);
            if next.is_finite() && next < current {
                let rel = (current - next) / current.max(f64::MIN_POSITIVE);
                a += da;
                b += db;
                current = next;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    (a, b)
}

fn initial_layout(x: &Array2<f64>, n_components: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (m, dim) = x.dim();
    if dim < n_components || m < 2 {
        return Array2::from_shape_fn((m, n_components), |_| rng.random_range(-10.0..10.0));
    }
    let scores = Pca::fit(x, n_components).transform(x);
    let max = scores.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max > 0.0 {
        scores * (10.0 / max)
    } else {
        scores
    }
}

fn clip(v: f64) -> f64 {
    v.clamp(-4.0, 4.0)
}

pub fn umap(x: &Array2<f64>, p: &UmapParams) -> Array2<f64> {
    let m = x.nrows();
    let dim = p.n_components;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut layout = initial_layout(x, dim, &mut rng);
    if m < 2 {
        return layout;
    }
    let k = p.n_neighbors.min(m);
    let (idx, dists) = knn(x, k, p.metric);
    let (rho, sigma) = smooth_knn_dist(&dists, k);
    let mut edges = fuzzy_graph(&idx, &dists, &rho, &sigma);
    let max_w = edges.iter().fold(0.0f64, |acc, e| acc.max(e.2));
    edges.retain(|e| e.2 >= max_w / p.n_epochs as f64);
    let (a, b) = find_ab_params(p.spread, p.min_dist);

    let eps: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let eps_neg: Vec<f64> = eps
        .iter()
        .map(|e| e / p.negative_sample_rate as f64)
        .collect();
    let mut next_sample = eps.clone();
    let mut next_neg = eps_neg.clone();
    let emb = layout.as_slice_mut().expect("standard layout");
    let mut cur = vec![0.0; dim];

    for epoch in 0..p.n_epochs {
        let n = epoch as f64;
        let alpha = p.learning_rate * (1.0 - n / p.n_epochs as f64);
        for (e, &(head, tail, _)) in edges.iter().enumerate() {
            if next_sample[e] > n {
                continue;
            }
            cur.copy_from_slice(&emb[head * dim..(head + 1) * dim]);
            let d2: f64 = (0..dim)
                .map(|i| (cur[i] - emb[tail * dim + i]).powi(2))
                .sum();
            let coeff = if d2 > 0.0 {
                -2.0 * a * b * d2.powf(b - 1.0) / (a * d2.powf(b) + 1.0)
            } else {
                0.0
            };
            for i in 0..dim {
                let g = clip(coeff * (cur[i] - emb[tail * dim + i])) * alpha;
                cur[i] += g;
                emb[tail * dim + i] -= g;
            }
            next_sample[e] += eps[e];

            let n_neg = ((n - next_neg[e]) / eps_neg[e]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let other = rng.random_range(0..m);
                if other == head {
                    continue;
                }
                let d2: f64 = (0..dim)
                    .map(|i| (cur[i] - emb[other * dim + i]).powi(2))
                    .sum();
                let coeff = if d2 > 0.0 {
                    2.0 * b / ((0.001 + d2) * (a * d2.powf(b) + 1.0))
                } else {
                    0.0
                };
                for i in 0..dim {
                    let g = if coeff > 0.0 {
                        clip(coeff * (cur[i] - emb[other * dim + i]))
                    } else {
                        4.0
                    };
                    cur[i] += g * alpha;
                }
            }
            next_neg[e] += n_neg as f64 * eps_neg[e];
            emb[head * dim..(head + 1) * dim].copy_from_slice(&cur);
        }
    }
    layout
}
