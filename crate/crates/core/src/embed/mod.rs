//! Embedding-cluster topic model.
//!
//! Document vectors are reduced to a few dimensions, clustered with
//! HDBSCAN, and each cluster becomes a topic whose vector is the centroid of
//! its documents in the original embedding space. Topics are labelled by
//! the word vectors closest to that centroid.

pub mod embeddings;
pub mod hdbscan;
pub mod pca;
pub mod scatter;
pub mod topics;
pub mod umap;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embeddings::{load_embeddings, read_embeddings, BlockKind, EmbeddingError, EmbeddingSet};
pub use hdbscan::{hdbscan, ClusterConfig, ClusterError};
pub use topics::{reduce_topics, topic_vectors, topic_words, TopicError, TopicVectorSet};

use crate::corpus::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Cosine,
}

impl Metric {
    pub fn distance(self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let na = a.dot(&a).sqrt();
                let nb = b.dot(&b).sqrt();
                match (na == 0.0, nb == 0.0) {
                    (true, true) => 0.0,
                    (true, false) | (false, true) => 1.0,
                    _ => (1.0 - a.dot(&b) / (na * nb)).max(0.0),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMethod {
    Pca,
    Umap,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionConfig {
    pub method: ReductionMethod,
    pub n_components: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            method: ReductionMethod::Umap,
            n_components: 5,
            n_neighbors: 10,
            min_dist: 0.1,
            metric: Metric::Cosine,
            seed: 42,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ReduceError {
    #[error("{points} points cannot be reduced to {n_components} dimensions")]
    TooFewPoints { points: usize, n_components: usize },
    #[error("invalid reduction config: {0}")]
    InvalidConfig(String),
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<(), ReduceError> {
        if self.n_components < 2 {
            return Err(ReduceError::InvalidConfig(
                "n_components must be >= 2".into(),
            ));
        }
        if self.n_neighbors < 2 {
            return Err(ReduceError::InvalidConfig(
                "n_neighbors must be >= 2".into(),
            ));
        }
        if !(self.min_dist >= 0.0 && self.min_dist.is_finite()) {
            return Err(ReduceError::InvalidConfig("min_dist must be >= 0".into()));
        }
        Ok(())
    }
}

pub fn reduce(x: &Array2<f64>, cfg: &ReductionConfig) -> Result<Array2<f64>, ReduceError> {
    cfg.validate()?;
    if cfg.method == ReductionMethod::None {
        return Ok(x.clone());
    }
    if x.nrows() <= cfg.n_components {
        return Err(ReduceError::TooFewPoints {
            points: x.nrows(),
            n_components: cfg.n_components,
        });
    }
    match cfg.method {
        ReductionMethod::Pca => {
            if x.ncols() < cfg.n_components {
                return Err(ReduceError::InvalidConfig(format!(
                    "n_components {} exceeds embedding dim {}",
                    cfg.n_components,
                    x.ncols()
                )));
            }
            Ok(pca::Pca::fit(x, cfg.n_components).transform(x))
        }
        ReductionMethod::Umap => Ok(umap::umap(
            x,
            &umap::UmapParams {
                n_components: cfg.n_components,
                n_neighbors: cfg.n_neighbors,
                min_dist: cfg.min_dist,
                metric: cfg.metric,
                seed: cfg.seed,
                ..umap::UmapParams::default()
            },
        )),
        ReductionMethod::None => unreachable!(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedConfig {
    pub reduction: ReductionConfig,
    pub cluster: ClusterConfig,
    /// Words kept per topic in the model file.
    pub top_words: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            reduction: ReductionConfig::default(),
            cluster: ClusterConfig::default(),
            top_words: 50,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error("embedding set does not match the corpus: {0}")]
    Mismatch(String),
}

/// Fitted embedding-cluster model as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedModel {
    pub config: EmbedConfig,
    pub doc_ids: Vec<String>,
    /// K×dim, original embedding space.
    pub topic_vectors: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub doc_topic: Vec<Option<usize>>,
    pub noise_count: usize,
    pub top_words: Vec<Vec<String>>,
    /// M×n_components reduced document coordinates.
    pub reduced: Vec<Vec<f64>>,
}

pub(crate) fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Array2<f64> {
    let cols = rows.first().map_or(0, Vec::len);
    Array2::from_shape_fn((rows.len(), cols), |(i, j)| rows[i][j])
}

impl EmbedModel {
    pub fn topic_set(&self) -> TopicVectorSet {
        TopicVectorSet {
            vectors: from_rows(&self.topic_vectors),
            sizes: self.sizes.clone(),
            doc_topic: self.doc_topic.clone(),
        }
    }

    pub fn reduced_points(&self) -> Array2<f64> {
        from_rows(&self.reduced)
    }

    fn assemble(
        config: EmbedConfig,
        corpus: &Corpus,
        emb: &EmbeddingSet,
        tv: &TopicVectorSet,
        reduced: &Array2<f64>,
    ) -> Self {
        let top_words = topic_words(tv, emb, corpus.vocabulary().words(), config.top_words);
        Self {
            config,
            doc_ids: corpus.documents().iter().map(|d| d.id.clone()).collect(),
            topic_vectors: to_rows(&tv.vectors),
            sizes: tv.sizes.clone(),
            doc_topic: tv.doc_topic.clone(),
            noise_count: tv.noise_count(),
            top_words,
            reduced: to_rows(reduced),
        }
    }

    /// Hierarchically merges topics down to `target` and relabels them.
    pub fn reduced_to(
        &self,
        corpus: &Corpus,
        emb: &EmbeddingSet,
        target: usize,
    ) -> Result<Self, EmbedError> {
        check_alignment(corpus, emb)?;
        let tv = reduce_topics(&self.topic_set(), emb, target)?;
        Ok(Self::assemble(
            self.config.clone(),
            corpus,
            emb,
            &tv,
            &self.reduced_points(),
        ))
    }
}

fn check_alignment(corpus: &Corpus, emb: &EmbeddingSet) -> Result<(), EmbedError> {
    if emb.doc_vectors.nrows() != corpus.num_documents()
        || emb.word_vectors.nrows() != corpus.vocab_size()
    {
        return Err(EmbedError::Mismatch(format!(
            "{}×{} vectors for {} documents and {} words",
            emb.doc_vectors.nrows(),
            emb.word_vectors.nrows(),
            corpus.num_documents(),
            corpus.vocab_size()
        )));
    }
    Ok(())
}

/// Reduce → cluster → centroid topic vectors → nearest-word labels.
pub fn fit_embed(
    corpus: &Corpus,
    emb: &EmbeddingSet,
    cfg: &EmbedConfig,
) -> Result<EmbedModel, EmbedError> {
    check_alignment(corpus, emb)?;
    cfg.cluster.validate()?;
    let reduced = reduce(&emb.doc_vectors, &cfg.reduction)?;
    let labels = hdbscan(&reduced, &cfg.cluster)?;
    let tv = topic_vectors(emb, &labels)?;
    Ok(EmbedModel::assemble(
        cfg.clone(),
        corpus,
        emb,
        &tv,
        &reduced,
    ))
}
