//! Centroid topic vectors, nearest-word topic labels and hierarchical topic
//! reduction.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use thiserror::Error;

use super::embeddings::EmbeddingSet;
use crate::align::cosine_view;
use crate::ranking::top_n_by;

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("clustering found no topic (every document is noise)")]
    NoClustersFound,
    #[error("label count {labels} does not match document count {docs}")]
    LengthMismatch { labels: usize, docs: usize },
    #[error("reduction target must be >= 1")]
    InvalidTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicVectorSet {
    /// K×dim centroids in the original embedding space.
    pub vectors: Array2<f64>,
    pub sizes: Vec<usize>,
    /// Topic per document, `None` for noise.
    pub doc_topic: Vec<Option<usize>>,
}

impl TopicVectorSet {
    pub fn num_topics(&self) -> usize {
        self.sizes.len()
    }

    pub fn noise_count(&self) -> usize {
        self.doc_topic.iter().filter(|t| t.is_none()).count()
    }
}

fn centroids(
    docs: &Array2<f64>,
    doc_topic: &[Option<usize>],
    k: usize,
) -> (Array2<f64>, Vec<usize>) {
    let mut sums = Array2::zeros((k, docs.ncols()));
    let mut sizes = vec![0usize; k];
    for (d, t) in doc_topic.iter().enumerate() {
        if let Some(t) = *t {
            let mut row = sums.row_mut(t);
            row += &docs.row(d);
            sizes[t] += 1;
        }
    }
    for (t, &n) in sizes.iter().enumerate() {
        if n > 0 {
            sums.row_mut(t).mapv_inplace(|x| x / n as f64);
        }
    }
    (sums, sizes)
}

/// Mean of each cluster's original-space document vectors. Labels must be
/// `0..K` with every id used; noise documents are left out.
pub fn topic_vectors(
    emb: &EmbeddingSet,
    labels: &[Option<usize>],
) -> Result<TopicVectorSet, TopicError> {
    if labels.len() != emb.doc_vectors.nrows() {
        return Err(TopicError::LengthMismatch {
            labels: labels.len(),
            docs: emb.doc_vectors.nrows(),
        });
    }
    let k = match labels.iter().flatten().max() {
        Some(&max) => max + 1,
        None => return Err(TopicError::NoClustersFound),
    };
    let (vectors, sizes) = centroids(&emb.doc_vectors, labels, k);
    Ok(TopicVectorSet {
        vectors,
        sizes,
        doc_topic: labels.to_vec(),
    })
}

/// Words ranked by cosine to each topic vector, ties lexicographic. Zero word
/// vectors rank last.
pub fn topic_words(
    tv: &TopicVectorSet,
    emb: &EmbeddingSet,
    vocabulary: &[String],
    n: usize,
) -> Vec<Vec<String>> {
    (0..tv.num_topics())
        .into_par_iter()
        .map(|t| {
            let topic = tv.vectors.row(t);
            let scores: Vec<f64> = emb
                .word_vectors
                .rows()
                .into_iter()
                .map(|w| cosine_view(w, topic).unwrap_or(f64::NEG_INFINITY))
                .collect();
            top_n_by(&scores, n, |i| &vocabulary[i])
                .into_iter()
                .map(|i| vocabulary[i].clone())
                .collect()
        })
        .collect()
}

fn similarity(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    cosine_view(a, b).unwrap_or(f64::NEG_INFINITY)
}

/// Repeatedly folds the smallest topic into its most cosine-similar other
/// topic until `target` remain. Ties pick the smallest id. Merged centroids
/// are recomputed from member documents; surviving topics keep their order
/// and are renumbered `0..target`.
pub fn reduce_topics(
    tv: &TopicVectorSet,
    emb: &EmbeddingSet,
    target: usize,
) -> Result<TopicVectorSet, TopicError> {
    if target == 0 {
        return Err(TopicError::InvalidTarget);
    }
    let mut doc_topic = tv.doc_topic.clone();
    let mut vectors = tv.vectors.clone();
    let mut sizes = tv.sizes.clone();
    while sizes.len() > target {
        let k = sizes.len();
        let mut small = 0;
        for t in 1..k {
            if sizes[t] < sizes[small] {
                small = t;
            }
        }
        let mut into = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for t in (0..k).filter(|&t| t != small) {
            let s = similarity(vectors.row(small), vectors.row(t));
            if into == usize::MAX || s > best {
                into = t;
                best = s;
            }
        }
        let into_after = if into > small { into - 1 } else { into };
        for slot in doc_topic.iter_mut().flatten() {
            if *slot == small {
                *slot = into_after;
            } else if *slot > small {
                *slot -= 1;
            }
        }
        let (v, s) = centroids(&emb.doc_vectors, &doc_topic, k - 1);
        vectors = v;
        sizes = s;
    }
    Ok(TopicVectorSet {
        vectors,
        sizes,
        doc_topic,
    })
}

/// Mean of all non-noise document vectors.
pub fn non_noise_mean(emb: &EmbeddingSet, doc_topic: &[Option<usize>]) -> Array1<f64> {
    let mut sum = Array1::zeros(emb.dim);
    let mut n = 0usize;
    for (d, t) in doc_topic.iter().enumerate() {
        if t.is_some() {
            sum += &emb.doc_vectors.row(d);
            n += 1;
        }
    }
    sum / n.max(1) as f64
}
