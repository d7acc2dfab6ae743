//! Gibbs-sampling Dirichlet Multinomial Mixture (GSDMM) for short texts.
//!
//! Every document carries exactly one topic. A sweep removes each document
//! from its topic and redraws it from
//!
//! ```text
//! p(z_d = t | rest) ∝ (m_t + λα) · Π_w Π_{j=1..N_d^w} (n_t^w + λβ + j − 1)
//!                                 / Π_{i=1..N_d} (n_t + Vλβ + i − 1)
//! ```
//!
//! evaluated in log space. After the last sweep the topic proportions and
//! topic-word distributions are estimated as
//! `α_t = (m_t + λα) / (Σ_t m_t + Tλα)` and
//! `β_wt = (n_t^w + λβ) / (Σ_w n_t^w + Vλβ)`.
//!
//! Empty documents do not take part in sampling and have no topic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::ranking::top_n_by;

#[derive(Debug, Error, PartialEq)]
pub enum GsdmmError {
    #[error("corpus has no non-empty document")]
    EmptyCorpus,
    #[error("invalid GSDMM config: {0}")]
    InvalidConfig(String),
    #[error("topic {0} has no documents")]
    EmptyTopic(usize),
    #[error("topic {topic} out of range (T={num_topics})")]
    TopicOutOfRange { topic: usize, num_topics: usize },
    #[error("inconsistent state: {0}")]
    InconsistentState(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsdmmConfig {
    /// Maximum number of topics, T.
    pub num_topics: usize,
    pub lambda_alpha: f64,
    pub lambda_beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl GsdmmConfig {
    /// T = 60, λα = λβ = 0.1, 30 sweeps.
    pub fn new(seed: u64) -> Self {
        Self {
            num_topics: 60,
            lambda_alpha: 0.1,
            lambda_beta: 0.1,
            iterations: 30,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GsdmmError> {
        if self.num_topics < 1 {
            return Err(GsdmmError::InvalidConfig("num_topics must be >= 1".into()));
        }
        if !(self.lambda_alpha > 0.0 && self.lambda_alpha.is_finite()) {
            return Err(GsdmmError::InvalidConfig("lambda_alpha must be > 0".into()));
        }
        if !(self.lambda_beta > 0.0 && self.lambda_beta.is_finite()) {
            return Err(GsdmmError::InvalidConfig("lambda_beta must be > 0".into()));
        }
        Ok(())
    }
}

/// Sufficient statistics of a topic assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GsdmmState {
    pub num_topics: usize,
    pub vocab_size: usize,
    /// Topic of each document; `None` for empty documents.
    pub z: Vec<Option<usize>>,
    /// Documents per topic, m_t.
    pub m: Vec<u32>,
    /// Word counts per topic, n_t^w, T×V row-major.
    pub n_tw: Vec<u32>,
    /// Total words per topic, n_t.
    pub n_t: Vec<u32>,
}

impl GsdmmState {
    /// Rebuilds every count from the assignment vector alone.
    pub fn from_assignments(
        corpus: &Corpus,
        num_topics: usize,
        z: Vec<Option<usize>>,
    ) -> Result<Self, GsdmmError> {
        if z.len() != corpus.num_documents() {
            return Err(GsdmmError::InconsistentState(format!(
                "{} assignments for {} documents",
                z.len(),
                corpus.num_documents()
            )));
        }
        let v = corpus.vocab_size();
        let mut state = Self {
            num_topics,
            vocab_size: v,
            z: vec![None; z.len()],
            m: vec![0; num_topics],
            n_tw: vec![0; num_topics * v],
            n_t: vec![0; num_topics],
        };
        for (d, (doc, topic)) in corpus.documents().iter().zip(z).enumerate() {
            match topic {
                Some(t) if t >= num_topics => {
                    return Err(GsdmmError::InconsistentState(format!(
                        "document {d} assigned to topic {t} >= T={num_topics}"
                    )))
                }
                Some(_) if doc.is_empty() => {
                    return Err(GsdmmError::InconsistentState(format!(
                        "empty document {d} has a topic"
                    )))
                }
                None if !doc.is_empty() => {
                    return Err(GsdmmError::InconsistentState(format!(
                        "document {d} has no topic"
                    )))
                }
                Some(t) => state.add(t, d, &doc.tokens),
                None => {}
            }
        }
        Ok(state)
    }

    fn add(&mut self, t: usize, d: usize, tokens: &[u32]) {
        self.z[d] = Some(t);
        self.m[t] += 1;
        self.n_t[t] += tokens.len() as u32;
        let row = &mut self.n_tw[t * self.vocab_size..(t + 1) * self.vocab_size];
        for &w in tokens {
            row[w as usize] += 1;
        }
    }

    fn remove(&mut self, d: usize, tokens: &[u32]) -> usize {
        let t = self.z[d].take().expect("document has a topic");
        self.m[t] -= 1;
        self.n_t[t] -= tokens.len() as u32;
        let row = &mut self.n_tw[t * self.vocab_size..(t + 1) * self.vocab_size];
        for &w in tokens {
            row[w as usize] -= 1;
        }
        t
    }

    pub fn word_counts(&self, t: usize) -> &[u32] {
        &self.n_tw[t * self.vocab_size..(t + 1) * self.vocab_size]
    }

    /// Topics with at least one document.
    pub fn occupied(&self) -> Vec<usize> {
        (0..self.num_topics).filter(|&t| self.m[t] > 0).collect()
    }
}

/// Closed-form α̂ (length T) and β̂ (T×V) for a state.
pub fn gsdmm_estimators(state: &GsdmmState, cfg: &GsdmmConfig) -> (Vec<f64>, Vec<Vec<f64>>) {
    let t_count = state.num_topics as f64;
    let v = state.vocab_size as f64;
    let docs: f64 = state.m.iter().map(|&m| m as f64).sum();
    let alpha_denom = docs + t_count * cfg.lambda_alpha;
    let alpha = state
        .m
        .iter()
        .map(|&m| (m as f64 + cfg.lambda_alpha) / alpha_denom)
        .collect();
    let beta = (0..state.num_topics)
        .map(|t| {
            let denom = state.n_t[t] as f64 + v * cfg.lambda_beta;
            state
                .word_counts(t)
                .iter()
                .map(|&n| (n as f64 + cfg.lambda_beta) / denom)
                .collect()
        })
        .collect();
    (alpha, beta)
}

pub struct GsdmmSampler<'a> {
    corpus: &'a Corpus,
    cfg: GsdmmConfig,
    rng: ChaCha8Rng,
    state: GsdmmState,
    /// Distinct (word, multiplicity) pairs per document.
    bags: Vec<Vec<(u32, u32)>>,
    log_weights: Vec<f64>,
    sweeps: usize,
}

impl<'a> GsdmmSampler<'a> {
    pub fn new(corpus: &'a Corpus, cfg: &GsdmmConfig) -> Result<Self, GsdmmError> {
        cfg.validate()?;
        if corpus.documents().iter().all(|d| d.is_empty()) {
            return Err(GsdmmError::EmptyCorpus);
        }
        let skipped = corpus.documents().iter().filter(|d| d.is_empty()).count();
        if skipped > 0 {
            log::warn!("GSDMM: skipping {skipped} empty documents");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let z = corpus
            .documents()
            .iter()
            .map(|d| (!d.is_empty()).then(|| rng.random_range(0..cfg.num_topics)))
            .collect();
        let state = GsdmmState::from_assignments(corpus, cfg.num_topics, z)?;
        let bags = corpus
            .documents()
            .iter()
            .map(|d| {
                let mut tokens = d.tokens.clone();
                tokens.sort_unstable();
                let mut bag: Vec<(u32, u32)> = Vec::new();
                for w in tokens {
                    match bag.last_mut() {
                        Some((last, c)) if *last == w => *c += 1,
                        _ => bag.push((w, 1)),
                    }
                }
                bag
            })
            .collect();
        Ok(Self {
            corpus,
            cfg: cfg.clone(),
            rng,
            state,
            bags,
            log_weights: vec![0.0; cfg.num_topics],
            sweeps: 0,
        })
    }

    pub fn sweep(&mut self) {
        let v_beta = self.state.vocab_size as f64 * self.cfg.lambda_beta;
        let beta = self.cfg.lambda_beta;
        for (d, doc) in self.corpus.documents().iter().enumerate() {
            if doc.is_empty() {
                continue;
            }
            self.state.remove(d, &doc.tokens);
            let n_d = doc.len();
            let mut max = f64::NEG_INFINITY;
            for t in 0..self.state.num_topics {
                let mut lp = (self.state.m[t] as f64 + self.cfg.lambda_alpha).ln();
                let row = self.state.word_counts(t);
                for &(w, count) in &self.bags[d] {
                    let base = row[w as usize] as f64 + beta;
                    for j in 0..count {
                        lp += (base + j as f64).ln();
                    }
                }
                let base = self.state.n_t[t] as f64 + v_beta;
                for i in 0..n_d {
                    lp -= (base + i as f64).ln();
                }
                self.log_weights[t] = lp;
                max = max.max(lp);
            }
            let mut total = 0.0;
            for lw in self.log_weights.iter_mut() {
                total += (*lw - max).exp();
                *lw = total;
            }
            let u = self.rng.random::<f64>() * total;
            let t = self
                .log_weights
                .partition_point(|&c| c <= u)
                .min(self.state.num_topics - 1);
            self.state.add(t, d, &doc.tokens);
        }
        self.sweeps += 1;
    }

    pub fn state(&self) -> &GsdmmState {
        &self.state
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn into_model(self) -> GsdmmModel {
        let (alpha_hat, beta_hat) = gsdmm_estimators(&self.state, &self.cfg);
        GsdmmModel {
            config: self.cfg,
            vocabulary: self.corpus.vocabulary().words().to_vec(),
            doc_ids: self
                .corpus
                .documents()
                .iter()
                .map(|d| d.id.clone())
                .collect(),
            occupied: self.state.occupied(),
            topic_sizes: self.state.m.clone(),
            assignments: self.state.z,
            alpha_hat,
            beta_hat,
            sweeps: self.sweeps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsdmmModel {
    pub config: GsdmmConfig,
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    /// Topic per document (`null` for empty documents).
    pub assignments: Vec<Option<usize>>,
    /// m_t for every topic id, including empty ones.
    pub topic_sizes: Vec<u32>,
    pub occupied: Vec<usize>,
    pub alpha_hat: Vec<f64>,
    /// T×V.
    pub beta_hat: Vec<Vec<f64>>,
    pub sweeps: usize,
}

impl GsdmmModel {
    /// Top `n` words of an occupied topic by β̂, ties lexicographic.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<String>, GsdmmError> {
        let size = *self
            .topic_sizes
            .get(topic)
            .ok_or(GsdmmError::TopicOutOfRange {
                topic,
                num_topics: self.topic_sizes.len(),
            })?;
        if size == 0 {
            return Err(GsdmmError::EmptyTopic(topic));
        }
        Ok(top_n_by(&self.beta_hat[topic], n, |i| &self.vocabulary[i])
            .into_iter()
            .map(|i| self.vocabulary[i].clone())
            .collect())
    }
}

pub fn fit_gsdmm(corpus: &Corpus, cfg: &GsdmmConfig) -> Result<GsdmmModel, GsdmmError> {
    let mut sampler = GsdmmSampler::new(corpus, cfg)?;
    for _ in 0..cfg.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
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

    fn state_with(m: Vec<u32>, n_tw: Vec<u32>, v: usize) -> GsdmmState {
        let t = m.len();
        let n_t = (0..t)
            .map(|i| n_tw[i * v..(i + 1) * v].iter().sum())
            .collect();
        GsdmmState {
            num_topics: t,
            vocab_size: v,
            z: vec![],
            m,
            n_tw,
            n_t,
        }
    }

    #[test]
    fn uniform_smoothing_when_topic_is_empty() {
        let cfg = GsdmmConfig {
            num_topics: 1,
            lambda_beta: 0.1,
            ..GsdmmConfig::new(0)
        };
        let (_, beta) = gsdmm_estimators(&state_with(vec![0], vec![0; 10], 10), &cfg);
        for b in &beta[0] {
            assert!((b - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha_from_document_counts() {
        let cfg = GsdmmConfig {
            num_topics: 2,
            lambda_alpha: 0.5,
            ..GsdmmConfig::new(0)
        };
        let (alpha, _) = gsdmm_estimators(&state_with(vec![3, 1], vec![0; 4], 2), &cfg);
        assert!((alpha[0] - 0.7).abs() < 1e-15);
        assert!((alpha[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn beta_single_word_seen_five_times() {
        let cfg = GsdmmConfig {
            num_topics: 1,
            lambda_beta: 1.0,
            ..GsdmmConfig::new(0)
        };
        let (_, beta) = gsdmm_estimators(&state_with(vec![1], vec![5, 0], 2), &cfg);
        assert!((beta[0][0] - 6.0 / 7.0).abs() < 1e-15);
        assert!((beta[0][1] - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn single_topic_collapses_to_unigram() {
        let c = corpus(&["a b a", "c", "b b"]);
        let cfg = GsdmmConfig {
            num_topics: 1,
            iterations: 2,
            ..GsdmmConfig::new(3)
        };
        let m = fit_gsdmm(&c, &cfg).unwrap();
        assert!((m.alpha_hat[0] - 1.0).abs() < 1e-15);
        let denom = 6.0 + 3.0 * 0.1;
        let expected = [2.1 / denom, 3.1 / denom, 1.1 / denom];
        for (b, e) in m.beta_hat[0].iter().zip(expected) {
            assert!((b - e).abs() < 1e-15);
        }
    }

    #[test]
    fn counts_rebuild_after_every_sweep() {
        let c = corpus(&["a b", "a a c", "", "d e d", "b c e", "e"]);
        let cfg = GsdmmConfig {
            num_topics: 4,
            ..GsdmmConfig::new(11)
        };
        let mut s = GsdmmSampler::new(&c, &cfg).unwrap();
        for _ in 0..10 {
            s.sweep();
            let rebuilt = GsdmmState::from_assignments(&c, 4, s.state().z.clone()).unwrap();
            assert_eq!(&rebuilt, s.state());
            assert_eq!(s.state().m.iter().sum::<u32>(), 5);
            assert_eq!(s.state().z[2], None);
            assert!(s
                .state()
                .z
                .iter()
                .enumerate()
                .all(|(d, z)| d == 2 || z.is_some()));
        }
    }

    #[test]
    fn identical_documents_collapse() {
        let docs = vec!["mask vaccine oxygen"; 40];
        let c = corpus(&docs);
        let cfg = GsdmmConfig {
            num_topics: 8,
            ..GsdmmConfig::new(5)
        };
        let m = fit_gsdmm(&c, &cfg).unwrap();
        let biggest = *m.topic_sizes.iter().max().unwrap();
        assert!(biggest as f64 >= 0.95 * 40.0);
        assert!(m.occupied.len() <= 2);
    }

    #[test]
    fn top_words_errors() {
        let c = corpus(&["a b", "a c"]);
        let cfg = GsdmmConfig {
            num_topics: 3,
            ..GsdmmConfig::new(1)
        };
        let m = fit_gsdmm(&c, &cfg).unwrap();
        let empty = (0..3).find(|&t| m.topic_sizes[t] == 0).unwrap();
        assert_eq!(m.top_words(empty, 2), Err(GsdmmError::EmptyTopic(empty)));
        let full = m.occupied[0];
        assert_eq!(m.top_words(full, 1).unwrap(), vec!["a"]);
        assert_eq!(m.top_words(full, 99).unwrap().len(), 3);
        assert!(matches!(
            m.top_words(3, 1),
            Err(GsdmmError::TopicOutOfRange { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let c = corpus(&["a b", "a a c", "d e d", "b c e", "e"]);
        let cfg = GsdmmConfig {
            num_topics: 4,
            ..GsdmmConfig::new(2)
        };
        assert_eq!(fit_gsdmm(&c, &cfg).unwrap(), fit_gsdmm(&c, &cfg).unwrap());
    }
}
