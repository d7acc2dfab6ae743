//! Independent reference implementations and data generators for the
//! integration tests. Nothing here calls the library code it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use topicforge::Corpus;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn corpus_of(docs: &[Vec<String>]) -> Corpus {
    let docs: Vec<(String, Vec<String>)> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (format!("d{i:04}"), d.clone()))
        .collect();
    Corpus::from_tokens(&docs).expect("valid corpus")
}

/// Random small corpus over words `w0..w{vocab}`; at least one document is
/// non-empty.
pub fn random_docs(
    r: &mut ChaCha8Rng,
    docs: usize,
    max_len: usize,
    vocab: usize,
) -> Vec<Vec<String>> {
    loop {
        let out: Vec<Vec<String>> = (0..docs)
            .map(|_| {
                let len = r.random_range(0..=max_len);
                (0..len)
                    .map(|_| format!("w{}", r.random_range(0..vocab)))
                    .collect()
            })
            .collect();
        if out.iter().any(|d| !d.is_empty()) {
            return out;
        }
    }
}

// ---------------------------------------------------------------- GSDMM

/// Closed-form estimators recomputed from the corpus and assignments.
pub fn gsdmm_estimators_oracle(
    docs: &[Vec<usize>],
    z: &[Option<usize>],
    t: usize,
    v: usize,
    lambda_alpha: f64,
    lambda_beta: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = vec![0u64; t];
    let mut n = vec![vec![0u64; v]; t];
    for (doc, zd) in docs.iter().zip(z) {
        if let Some(k) = zd {
            m[*k] += 1;
            for &w in doc {
                n[*k][w] += 1;
            }
        }
    }
    let m_total: u64 = m.iter().sum();
    let alpha = m
        .iter()
        .map(|&mk| (mk as f64 + lambda_alpha) / (m_total as f64 + t as f64 * lambda_alpha))
        .collect();
    let beta = n
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| (c as f64 + lambda_beta) / (total as f64 + v as f64 * lambda_beta))
                .collect()
        })
        .collect();
    (alpha, beta)
}

/// Share of documents whose cluster's majority label matches their own.
pub fn purity(found: &[Option<usize>], truth: &[usize]) -> f64 {
    let mut table: BTreeMap<Option<usize>, BTreeMap<usize, usize>> = BTreeMap::new();
    for (f, t) in found.iter().zip(truth) {
        *table.entry(*f).or_default().entry(*t).or_insert(0) += 1;
    }
    let hits: usize = table
        .iter()
        .filter(|(k, _)| k.is_some())
        .map(|(_, row)| row.values().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / truth.len() as f64
}

// ---------------------------------------------------------------- LDA

/// Planted two-topic corpus with disjoint vocabularies. Returns the tokens
/// and the true topic-word distributions keyed by word.
pub fn planted_lda_corpus(
    r: &mut ChaCha8Rng,
    m: usize,
    words_per_topic: usize,
) -> (Vec<Vec<String>>, Vec<BTreeMap<String, f64>>) {
    let topics: Vec<BTreeMap<String, f64>> = (0..2)
        .map(|k| {
            let weights: Vec<f64> = (0..words_per_topic)
                .map(|i| 1.0 / (i as f64 + 2.0))
                .collect();
            let total: f64 = weights.iter().sum();
            weights
                .iter()
                .enumerate()
                .map(|(i, w)| (format!("t{k}w{i}"), w / total))
                .collect()
        })
        .collect();
    let cdfs: Vec<Vec<(f64, String)>> = topics
        .iter()
        .map(|t| {
            let mut acc = 0.0;
            t.iter()
                .map(|(w, p)| {
                    acc += p;
                    (acc, w.clone())
                })
                .collect()
        })
        .collect();
    let docs = (0..m)
        .map(|_| {
            let share: f64 = r.random_range(0.0..1.0);
            let len = r.random_range(12..=18);
            (0..len)
                .map(|_| {
                    let k = if r.random_bool(share) { 0 } else { 1 };
                    let u: f64 = r.random_range(0.0..1.0);
                    let cdf = &cdfs[k];
                    cdf.iter()
                        .find(|(c, _)| u < *c)
                        .unwrap_or(cdf.last().unwrap())
                        .1
                        .clone()
                })
                .collect()
        })
        .collect();
    (docs, topics)
}

pub fn cosine_plain(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

// ---------------------------------------------------------------- coherence

/// Every window materialised as a set of words.
pub fn enumerate_windows(docs: &[Vec<String>], s: usize) -> Vec<BTreeSet<String>> {
    let mut out = Vec::new();
    for d in docs {
        if d.is_empty() {
            continue;
        }
        if d.len() <= s {
            out.push(d.iter().cloned().collect());
        } else {
            for start in 0..=d.len() - s {
                out.push(d[start..start + s].iter().cloned().collect());
            }
        }
    }
    out
}

pub struct OracleCounts {
    pub total: u64,
    pub single: BTreeMap<String, u64>,
    pub pair: BTreeMap<(String, String), u64>,
}

pub fn oracle_counts(docs: &[Vec<String>], s: usize) -> OracleCounts {
    let windows = enumerate_windows(docs, s);
    let mut single = BTreeMap::new();
    let mut pair = BTreeMap::new();
    for w in &windows {
        for a in w {
            *single.entry(a.clone()).or_insert(0) += 1;
            for b in w {
                if a < b {
                    *pair.entry((a.clone(), b.clone())).or_insert(0) += 1;
                }
            }
        }
    }
    OracleCounts {
        total: windows.len() as u64,
        single,
        pair,
    }
}

impl OracleCounts {
    fn joint(&self, a: &str, b: &str) -> u64 {
        if a == b {
            return self.single.get(a).copied().unwrap_or(0);
        }
        let key = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.pair.get(&key).copied().unwrap_or(0)
    }
}

/// NPMI written out term by term: `(ln P(a,b)+e) - ln P(a) - ln P(b)` over
/// `-ln(P(a,b)+e)`, capped at 1 when `P(a,b)+e >= 1`, kept inside [-1, 1],
/// `None` for a zero marginal.
pub fn oracle_npmi(c: &OracleCounts, a: &str, b: &str, eps: f64) -> Option<f64> {
    let n = c.total as f64;
    let ca = *c.single.get(a)?;
    let cb = *c.single.get(b)?;
    let joint = c.joint(a, b) as f64 / n + eps;
    if joint >= 1.0 {
        return Some(1.0);
    }
    let num = joint.ln() - (ca as f64 / n).ln() - (cb as f64 / n).ln();
    Some((num / -joint.ln()).clamp(-1.0, 1.0))
}

/// One-vs-all cosine confirmation, averaged over the topic's words.
pub fn oracle_coherence(c: &OracleCounts, words: &[String], eps: f64) -> f64 {
    let vectors: Vec<Vec<f64>> = words
        .iter()
        .map(|a| {
            words
                .iter()
                .map(|b| oracle_npmi(c, a, b, eps).unwrap_or(0.0))
                .collect()
        })
        .collect();
    let whole: Vec<f64> = (0..words.len())
        .map(|j| vectors.iter().map(|v| v[j]).sum())
        .collect();
    let mut total = 0.0;
    for v in &vectors {
        let dot: f64 = v.iter().zip(&whole).map(|(x, y)| x * y).sum();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nw = whole.iter().map(|x| x * x).sum::<f64>().sqrt();
        total += if nv == 0.0 || nw == 0.0 {
            0.0
        } else {
            dot / (nv * nw)
        };
    }
    total / words.len() as f64
}

/// Documents of ~100 tokens: 30 from their planted group of 50 words and 70
/// from a shared background pool, shuffled.
pub fn planted_cooccurrence_corpus(
    r: &mut ChaCha8Rng,
    groups: usize,
    group_size: usize,
    docs_per_group: usize,
) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let group_words: Vec<Vec<String>> = (0..groups)
        .map(|g| (0..group_size).map(|i| format!("g{g}w{i}")).collect())
        .collect();
    let background: Vec<String> = (0..500).map(|i| format!("bg{i}")).collect();
    let mut docs = Vec::new();
    for words in &group_words {
        for _ in 0..docs_per_group {
            let mut d: Vec<String> = (0..30)
                .map(|_| words[r.random_range(0..words.len())].clone())
                .collect();
            d.extend((0..70).map(|_| background[r.random_range(0..background.len())].clone()));
            use rand::seq::SliceRandom;
            d.shuffle(r);
            docs.push(d);
        }
    }
    (docs, group_words)
}

// ---------------------------------------------------------------- HDBSCAN

fn euclid(x: &Array2<f64>, i: usize, j: usize) -> f64 {
    x.row(i)
        .iter()
        .zip(x.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Full mutual-reachability matrix; core distance counts the point itself.
pub fn mutual_reachability(x: &Array2<f64>, min_samples: usize) -> Vec<Vec<f64>> {
    let n = x.nrows();
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclid(x, i, j)).collect())
        .collect();
    let core: Vec<f64> = d
        .iter()
        .map(|row| {
            let mut s = row.clone();
            s.sort_by(f64::total_cmp);
            s[min_samples.min(n) - 1]
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        d[i][j].max(core[i]).max(core[j])
                    }
                })
                .collect()
        })
        .collect()
}

fn components(members: &[usize], mr: &[Vec<f64>], below: f64, inclusive: bool) -> Vec<Vec<usize>> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut out = Vec::new();
    for &s in members {
        if seen.contains(&s) {
            continue;
        }
        let mut comp = vec![s];
        seen.insert(s);
        let mut i = 0;
        while i < comp.len() {
            let a = comp[i];
            for &b in members {
                let linked = if inclusive {
                    mr[a][b] <= below
                } else {
                    mr[a][b] < below
                };
                if !seen.contains(&b) && linked {
                    seen.insert(b);
                    comp.push(b);
                }
            }
            i += 1;
        }
        out.push(comp);
    }
    out
}

/// Smallest distance level at which `members` is connected.
fn bottleneck(members: &[usize], mr: &[Vec<f64>]) -> f64 {
    let mut levels: Vec<f64> = members
        .iter()
        .flat_map(|&a| {
            members
                .iter()
                .filter(move |&&b| b > a)
                .map(move |&b| mr[a][b])
        })
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if components(members, mr, levels[mid], true).len() == 1 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    levels[lo]
}

struct OracleCluster {
    birth: f64,
    points: Vec<usize>,
    children: Vec<usize>,
    stability: f64,
}

fn lam(w: f64) -> f64 {
    if w > 0.0 {
        1.0 / w
    } else {
        f64::INFINITY
    }
}

fn grow(id: usize, members: Vec<usize>, mr: &[Vec<f64>], mcs: usize, out: &mut Vec<OracleCluster>) {
    let mut current = members;
    loop {
        if current.len() == 1 {
            out[id].stability += f64::INFINITY - out[id].birth;
            return;
        }
        let w = bottleneck(&current, mr);
        let l = lam(w);
        let parts = components(&current, mr, w, false);
        let big: Vec<Vec<usize>> = parts.iter().filter(|p| p.len() >= mcs).cloned().collect();
        let birth = out[id].birth;
        for p in parts.iter().filter(|p| p.len() < mcs) {
            out[id].stability += p.len() as f64 * (l - birth);
        }
        match big.len() {
            0 => return,
            1 => current = big.into_iter().next().unwrap(),
            _ => {
                for p in big {
                    out[id].stability += p.len() as f64 * (l - birth);
                    let child = out.len();
                    out.push(OracleCluster {
                        birth: l,
                        points: p.clone(),
                        children: Vec::new(),
                        stability: 0.0,
                    });
                    out[id].children.push(child);
                    grow(child, p, mr, mcs, out);
                }
                return;
            }
        }
    }
}

fn choose(id: usize, cl: &[OracleCluster]) -> (f64, Vec<usize>) {
    if cl[id].children.is_empty() {
        return (cl[id].stability, vec![id]);
    }
    let mut sum = 0.0;
    let mut picked = Vec::new();
    for &c in &cl[id].children {
        let (s, p) = choose(c, cl);
        sum += s;
        picked.extend(p);
    }
    if sum > cl[id].stability {
        (sum, picked)
    } else {
        (cl[id].stability, vec![id])
    }
}

/// Clusters as sorted point sets plus the sorted noise set, found by direct
/// connectivity on the mutual-reachability matrix (no spanning tree).
pub fn hdbscan_oracle(
    x: &Array2<f64>,
    min_cluster_size: usize,
    min_samples: usize,
) -> (BTreeSet<Vec<usize>>, Vec<usize>) {
    let mr = mutual_reachability(x, min_samples);
    let n = x.nrows();
    let mut clusters = vec![OracleCluster {
        birth: 0.0,
        points: (0..n).collect(),
        children: Vec::new(),
        stability: 0.0,
    }];
    grow(0, (0..n).collect(), &mr, min_cluster_size, &mut clusters);
    let (_, chosen) = choose(0, &clusters);
    let mut found = BTreeSet::new();
    let mut covered = BTreeSet::new();
    for c in chosen {
        let mut p = clusters[c].points.clone();
        p.sort_unstable();
        covered.extend(p.iter().copied());
        found.insert(p);
    }
    let noise = (0..n).filter(|i| !covered.contains(i)).collect();
    (found, noise)
}

/// Same shape as [`hdbscan_oracle`] for a label vector.
pub fn partition(labels: &[Option<usize>]) -> (BTreeSet<Vec<usize>>, Vec<usize>) {
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut noise = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Some(c) => groups.entry(*c).or_default().push(i),
            None => noise.push(i),
        }
    }
    (groups.into_values().collect(), noise)
}

pub fn gaussian_blobs(
    r: &mut ChaCha8Rng,
    centers: &[Vec<f64>],
    per: &[usize],
    sd: &[f64],
) -> (Array2<f64>, Vec<usize>) {
    let dim = centers[0].len();
    let total: usize = per.iter().sum();
    let mut x = Array2::zeros((total, dim));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (c, center) in centers.iter().enumerate() {
        let noise = Normal::new(0.0, sd[c]).unwrap();
        for _ in 0..per[c] {
            for d in 0..dim {
                x[[row, d]] = center[d] + noise.sample(r);
            }
            labels.push(c);
            row += 1;
        }
    }
    (x, labels)
}

// ---------------------------------------------------------------- eigen

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvalues
/// descending with matching eigenvector columns.
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    (values, vectors)
}
