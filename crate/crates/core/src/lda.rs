//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! Each token's topic is resampled from
//! `p(z = k | rest) ∝ (n_dk + α) (n_kw + η) / (n_k + Vη)`
//! with the token's own assignment removed from the counts. Topic-word
//! (`beta`) and document-topic (`theta`) distributions are read off the
//! final state with the same smoothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::ranking::top_n_by;

#[derive(Debug, Error, PartialEq)]
pub enum LdaError {
    #[error("corpus has no non-empty document")]
    EmptyCorpus,
    #[error("invalid LDA config: {0}")]
    InvalidConfig(String),
    #[error("topic {topic} out of range (K={num_topics})")]
    TopicOutOfRange { topic: usize, num_topics: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaConfig {
    pub num_topics: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub eta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 1/K`, `eta = 0.01`, 200 sweeps.
    pub fn new(num_topics: usize, seed: u64) -> Self {
        Self {
            num_topics,
            alpha: 1.0 / num_topics.max(1) as f64,
            eta: 0.01,
            iterations: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        if self.num_topics < 1 {
            return Err(LdaError::InvalidConfig("num_topics must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(LdaError::InvalidConfig("alpha must be > 0".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(LdaError::InvalidConfig("eta must be > 0".into()));
        }
        if self.iterations < 1 {
            return Err(LdaError::InvalidConfig("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sampler state. Exposed so callers can step sweep by sweep and inspect
/// the count tables.
pub struct LdaSampler<'a> {
    corpus: &'a Corpus,
    cfg: LdaConfig,
    rng: ChaCha8Rng,
    /// Per-token topic ids, one vector per document.
    assignments: Vec<Vec<u32>>,
    /// M×K, row-major.
    doc_topic: Vec<u32>,
    /// K×V, row-major.
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    weights: Vec<f64>,
    sweeps: usize,
    skipped_empty: usize,
}

impl<'a> LdaSampler<'a> {
    /// Draws the initial assignments uniformly at random.
    pub fn new(corpus: &'a Corpus, cfg: &LdaConfig) -> Result<Self, LdaError> {
        cfg.validate()?;
        let skipped_empty = corpus.documents().iter().filter(|d| d.is_empty()).count();
        if skipped_empty == corpus.num_documents() {
            return Err(LdaError::EmptyCorpus);
        }
        if skipped_empty > 0 {
            log::warn!("LDA: skipping {skipped_empty} empty documents");
        }
        let k = cfg.num_topics;
        let v = corpus.vocab_size();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut doc_topic = vec![0u32; corpus.num_documents() * k];
        let mut topic_word = vec![0u32; k * v];
        let mut topic_total = vec![0u32; k];
        let assignments = corpus
            .documents()
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.tokens
                    .iter()
                    .map(|&w| {
                        let t = rng.random_range(0..k);
                        doc_topic[d * k + t] += 1;
                        topic_word[t * v + w as usize] += 1;
                        topic_total[t] += 1;
                        t as u32
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            corpus,
            cfg: cfg.clone(),
            rng,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            weights: vec![0.0; k],
            sweeps: 0,
            skipped_empty,
        })
    }

    /// One full pass over every token, documents in corpus order.
    pub fn sweep(&mut self) {
        let k = self.cfg.num_topics;
        let v = self.corpus.vocab_size();
        let alpha = self.cfg.alpha;
        let eta = self.cfg.eta;
        let v_eta = v as f64 * eta;
        for (d, doc) in self.corpus.documents().iter().enumerate() {
            let dt = &mut self.doc_topic[d * k..(d + 1) * k];
            for (n, &w) in doc.tokens.iter().enumerate() {
                let w = w as usize;
                let old = self.assignments[d][n] as usize;
                dt[old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                #[allow(clippy::needless_range_loop)]
                for t in 0..k {
                    let p = (dt[t] as f64 + alpha) * (self.topic_word[t * v + w] as f64 + eta)
                        / (self.topic_total[t] as f64 + v_eta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.weights.partition_point(|&c| c <= u).min(k - 1);

                dt[new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_total[new] += 1;
                self.assignments[d][n] = new as u32;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    /// n_dk for document `d`.
    pub fn doc_topic_counts(&self, d: usize) -> &[u32] {
        let k = self.cfg.num_topics;
        &self.doc_topic[d * k..(d + 1) * k]
    }

    /// n_kw for topic `t`.
    pub fn topic_word_counts(&self, t: usize) -> &[u32] {
        let v = self.corpus.vocab_size();
        &self.topic_word[t * v..(t + 1) * v]
    }

    /// n_k·.
    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_total
    }

    pub fn into_model(self, keep_assignments: bool) -> LdaModel {
        let k = self.cfg.num_topics;
        let v = self.corpus.vocab_size();
        let alpha = self.cfg.alpha;
        let eta = self.cfg.eta;
        let beta = (0..k)
            .map(|t| {
                let denom = self.topic_total[t] as f64 + v as f64 * eta;
                self.topic_word[t * v..(t + 1) * v]
                    .iter()
                    .map(|&c| (c as f64 + eta) / denom)
                    .collect()
            })
            .collect();
        let theta = self
            .corpus
            .documents()
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                let denom = doc.len() as f64 + k as f64 * alpha;
                self.doc_topic[d * k..(d + 1) * k]
                    .iter()
                    .map(|&c| (c as f64 + alpha) / denom)
                    .collect()
            })
            .collect();
        LdaModel {
            config: self.cfg,
            vocabulary: self.corpus.vocabulary().words().to_vec(),
            doc_ids: self
                .corpus
                .documents()
                .iter()
                .map(|d| d.id.clone())
                .collect(),
            beta,
            theta,
            assignments: keep_assignments.then_some(self.assignments),
            sweeps: self.sweeps,
            skipped_empty: self.skipped_empty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    /// K×V topic-word distributions, row-stochastic.
    pub beta: Vec<Vec<f64>>,
    /// M×K document-topic distributions, row-stochastic.
    pub theta: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignments: Option<Vec<Vec<u32>>>,
    pub sweeps: usize,
    pub skipped_empty: usize,
}

impl LdaModel {
    pub fn num_topics(&self) -> usize {
        self.beta.len()
    }

    /// Top `n` words of `topic` by β, ties lexicographic; clamps to V.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<String>, LdaError> {
        let row = self.beta.get(topic).ok_or(LdaError::TopicOutOfRange {
            topic,
            num_topics: self.num_topics(),
        })?;
        Ok(top_n_by(row, n, |i| &self.vocabulary[i])
            .into_iter()
            .map(|i| self.vocabulary[i].clone())
            .collect())
    }
}

pub fn fit_lda(corpus: &Corpus, cfg: &LdaConfig) -> Result<LdaModel, LdaError> {
    let mut sampler = LdaSampler::new(corpus, cfg)?;
    for _ in 0..cfg.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model(false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(docs: &[&str]) -> Corpus {
        let docs: Vec<(String, Vec<&str>)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (format!("d{i}"), d.split_whitespace().collect()))
            .collect();
        Corpus::from_tokens(&docs).unwrap()
    }

    #[test]
    fn single_topic_is_smoothed_unigram() {
        let c = corpus(&["a a b", "a c", ""]);
        let mut cfg = LdaConfig::new(1, 7);
        cfg.iterations = 3;
        let m = fit_lda(&c, &cfg).unwrap();
        let denom = 5.0 + 3.0 * cfg.eta;
        let expected = [
            (3.0 + cfg.eta) / denom,
            (1.0 + cfg.eta) / denom,
            (1.0 + cfg.eta) / denom,
        ];
        for (b, e) in m.beta[0].iter().zip(expected) {
            assert!((b - e).abs() < 1e-15);
        }
        assert!(m.theta.iter().all(|row| (row[0] - 1.0).abs() < 1e-15));
        assert_eq!(m.skipped_empty, 1);
        assert_eq!(m.top_words(0, 1).unwrap(), vec!["a"]);
    }

    #[test]
    fn rows_are_stochastic() {
        let c = corpus(&["a b c d", "c d e", "e f a", "", "f f f b"]);
        let m = fit_lda(&c, &LdaConfig::new(3, 1)).unwrap();
        for row in m.beta.iter().chain(&m.theta) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_assignments() {
        let c = corpus(&["a b c d", "c d e", "e f a", "f f f b"]);
        let cfg = LdaConfig {
            iterations: 20,
            ..LdaConfig::new(2, 99)
        };
        let run = || {
            let mut s = LdaSampler::new(&c, &cfg).unwrap();
            for _ in 0..cfg.iterations {
                s.sweep();
            }
            s.assignments().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn top_words_clamp_and_range() {
        let c = corpus(&["a b", "b c"]);
        let m = fit_lda(&c, &LdaConfig::new(2, 3)).unwrap();
        assert_eq!(m.top_words(0, 10).unwrap().len(), 3);
        assert_eq!(
            m.top_words(2, 1),
            Err(LdaError::TopicOutOfRange {
                topic: 2,
                num_topics: 2
            })
        );
    }

    #[test]
    fn rejects_bad_input() {
        let c = corpus(&["a", ""]);
        assert!(matches!(
            fit_lda(
                &c,
                &LdaConfig {
                    alpha: 0.0,
                    ..LdaConfig::new(2, 0)
                }
            ),
            Err(LdaError::InvalidConfig(_))
        ));
        assert!(matches!(
            fit_lda(&c, &LdaConfig::new(0, 0)),
            Err(LdaError::InvalidConfig(_))
        ));
        let vocab = crate::corpus::Vocabulary::from_words(vec!["a".into()]).unwrap();
        let empty = Corpus::new(
            vec![crate::corpus::Document {
                id: "x".into(),
                tokens: vec![],
            }],
            vocab,
        )
        .unwrap();
        assert_eq!(
            fit_lda(&empty, &LdaConfig::new(2, 0)),
            Err(LdaError::EmptyCorpus)
        );
    }
}
