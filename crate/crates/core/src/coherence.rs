//! NPMI topic coherence over Boolean sliding windows.
//!
//! Every contiguous window of `window_s` tokens is a virtual document
//! (shorter documents give one window, empty ones none). For a topic's word
//! set `W`, each word gets a context vector of NPMI values against all of
//! `W`; the topic score is the mean cosine between each word's vector and
//! the sum of all of them.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Vocabulary, WordId};

#[derive(Debug, Error, PartialEq)]
pub enum CoherenceError {
    #[error("invalid coherence config: {0}")]
    InvalidConfig(String),
    #[error("topic has {0} word(s) in the reference vocabulary, need at least 2")]
    InsufficientVocabularyOverlap(usize),
    #[error("every topic was skipped")]
    AllTopicsSkipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceConfig {
    pub window_s: usize,
    /// Upper bound on words per topic; fewer are used when a topic has fewer.
    pub top_n: usize,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        Self {
            window_s: 110,
            top_n: 50,
            epsilon: 1e-12,
            gamma: 1.0,
        }
    }
}

impl CoherenceConfig {
    pub fn validate(&self) -> Result<(), CoherenceError> {
        if self.window_s < 2 {
            return Err(CoherenceError::InvalidConfig(
                "window_s must be >= 2".into(),
            ));
        }
        if self.top_n < 2 {
            return Err(CoherenceError::InvalidConfig("top_n must be >= 2".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(CoherenceError::InvalidConfig("epsilon must be > 0".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(CoherenceError::InvalidConfig("gamma must be > 0".into()));
        }
        Ok(())
    }
}

/// Boolean window occurrence counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowCounts {
    total_windows: u64,
    single: HashMap<WordId, u64>,
    pair: HashMap<(WordId, WordId), u64>,
}

impl WindowCounts {
    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn single(&self, w: WordId) -> u64 {
        self.single.get(&w).copied().unwrap_or(0)
    }

    /// Unordered; `pair(w, w) == single(w)`.
    pub fn pair(&self, a: WordId, b: WordId) -> u64 {
        if a == b {
            return self.single(a);
        }
        self.pair.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }

    pub fn singles(&self) -> &HashMap<WordId, u64> {
        &self.single
    }

    /// Keys are `(a, b)` with `a < b`.
    pub fn pairs(&self) -> &HashMap<(WordId, WordId), u64> {
        &self.pair
    }

    fn add_window(&mut self, present: &[WordId]) {
        self.total_windows += 1;
        for (i, &a) in present.iter().enumerate() {
            *self.single.entry(a).or_insert(0) += 1;
            for &b in &present[i + 1..] {
                *self.pair.entry((a, b)).or_insert(0) += 1;
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.total_windows += other.total_windows;
        for (k, v) in other.single {
            *self.single.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.pair {
            *self.pair.entry(k).or_insert(0) += v;
        }
        self
    }
}

/// Counts over the whole vocabulary.
pub fn window_counts(corpus: &Corpus, window_s: usize) -> WindowCounts {
    count_windows(corpus, window_s, None)
}

/// Counts restricted to `words`; every window is still counted in the total.
pub fn window_counts_for(corpus: &Corpus, window_s: usize, words: &[WordId]) -> WindowCounts {
    let mut mask = vec![false; corpus.vocab_size()];
    for &w in words {
        mask[w as usize] = true;
    }
    count_windows(corpus, window_s, Some(&mask))
}

fn count_windows(corpus: &Corpus, window_s: usize, mask: Option<&[bool]>) -> WindowCounts {
    assert!(window_s >= 1, "window_s must be positive");
    let tracked = |w: WordId| mask.is_none_or(|m| m[w as usize]);
    corpus
        .documents()
        .par_iter()
        .fold(WindowCounts::default, |mut acc, doc| {
            let tokens = &doc.tokens;
            if tokens.is_empty() {
                return acc;
            }
            let width = window_s.min(tokens.len());
            let mut in_window: HashMap<WordId, u32> = HashMap::new();
            for &w in &tokens[..width] {
                if tracked(w) {
                    *in_window.entry(w).or_insert(0) += 1;
                }
            }
            let mut present: Vec<WordId> = Vec::new();
            let mut emit = |in_window: &HashMap<WordId, u32>, acc: &mut WindowCounts| {
                present.clear();
                present.extend(in_window.keys().copied());
                present.sort_unstable();
                acc.add_window(&present);
            };
            emit(&in_window, &mut acc);
            for start in 1..=tokens.len() - width {
                let out = tokens[start - 1];
                if tracked(out) {
                    let c = in_window.get_mut(&out).expect("outgoing token was counted");
                    *c -= 1;
                    if *c == 0 {
                        in_window.remove(&out);
                    }
                }
                let inc = tokens[start + width - 1];
                if tracked(inc) {
                    *in_window.entry(inc).or_insert(0) += 1;
                }
                emit(&in_window, &mut acc);
            }
            acc
        })
        .reduce(WindowCounts::default, WindowCounts::merge)
}

/// NPMI raised to `gamma`. `None` when either marginal is zero.
///
/// When `P(wi, wj) + epsilon >= 1` the value is +1. Smoothing can push the
/// ratio a hair past 1 for words that only occur together, so the result is
/// clamped to `[-1, 1]` before the power is applied. A non-integer `gamma`
/// keeps the sign: `sign(x) |x|^gamma`.
pub fn npmi(wc: &WindowCounts, wi: WordId, wj: WordId, epsilon: f64, gamma: f64) -> Option<f64> {
    let total = wc.total_windows() as f64;
    let ci = wc.single(wi);
    let cj = wc.single(wj);
    if ci == 0 || cj == 0 {
        return None;
    }
    let pij = wc.pair(wi, wj) as f64 / total + epsilon;
    let value = if pij >= 1.0 {
        1.0
    } else {
        let pi = ci as f64 / total;
        let pj = cj as f64 / total;
        ((pij / (pi * pj)).ln() / -pij.ln()).clamp(-1.0, 1.0)
    };
    Some(signed_pow(value, gamma))
}

fn signed_pow(x: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        x
    } else if gamma.fract() == 0.0 && gamma.abs() < i32::MAX as f64 {
        x.powi(gamma as i32)
    } else {
        x.signum() * x.abs().powf(gamma)
    }
}

/// Score for a set of word ids (any size ≥ 1). Undefined NPMI entries count
/// as 0 and a zero context vector confirms nothing.
pub(crate) fn coherence_of_ids(ids: &[WordId], wc: &WindowCounts, cfg: &CoherenceConfig) -> f64 {
    let n = ids.len();
    let vectors: Vec<Vec<f64>> = ids
        .iter()
        .map(|&wi| {
            ids.iter()
                .map(|&wj| npmi(wc, wi, wj, cfg.epsilon, cfg.gamma).unwrap_or(0.0))
                .collect()
        })
        .collect();
    let mut total = vec![0.0; n];
    for v in &vectors {
        for (t, x) in total.iter_mut().zip(v) {
            *t += x;
        }
    }
    let norm_total = total.iter().map(|x| x * x).sum::<f64>().sqrt();
    let phi_sum: f64 = vectors
        .iter()
        .map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || norm_total == 0.0 {
                0.0
            } else {
                v.iter().zip(&total).map(|(a, b)| a * b).sum::<f64>() / (norm * norm_total)
            }
        })
        .sum();
    phi_sum / n as f64
}

/// Resolves the first `top_n` ranked words against the vocabulary, keeping
/// in-vocabulary ones (duplicates dropped).
pub fn topic_word_ids<S: AsRef<str>>(words: &[S], vocab: &Vocabulary, top_n: usize) -> Vec<WordId> {
    let mut ids: Vec<WordId> = Vec::new();
    for w in words.iter().take(top_n) {
        if let Some(id) = vocab.id(w.as_ref()) {
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
    }
    ids
}

/// Coherence of one ranked word list; returns the score and the number of
/// words actually used.
pub fn topic_coherence<S: AsRef<str>>(
    words: &[S],
    vocab: &Vocabulary,
    wc: &WindowCounts,
    cfg: &CoherenceConfig,
) -> Result<(f64, usize), CoherenceError> {
    let ids = topic_word_ids(words, vocab, cfg.top_n);
    if ids.len() < 2 {
        return Err(CoherenceError::InsufficientVocabularyOverlap(ids.len()));
    }
    Ok((coherence_of_ids(&ids, wc, cfg), ids.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScore {
    pub topic: usize,
    pub score: f64,
    pub effective_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub model_id: String,
    pub config: CoherenceConfig,
    pub per_topic: Vec<TopicScore>,
    pub mean: f64,
    pub skipped: Vec<usize>,
}

/// Scores every `(topic id, ranked words)` pair. Topics with fewer than two
/// reference-vocabulary words are listed in `skipped`.
pub fn model_coherence(
    model_id: &str,
    topics: &[(usize, Vec<String>)],
    vocab: &Vocabulary,
    wc: &WindowCounts,
    cfg: &CoherenceConfig,
) -> Result<CoherenceReport, CoherenceError> {
    cfg.validate()?;
    let results: Vec<_> = topics
        .par_iter()
        .map(|(t, words)| (*t, topic_coherence(words, vocab, wc, cfg)))
        .collect();
    let mut per_topic = Vec::new();
    let mut skipped = Vec::new();
    for (topic, r) in results {
        match r {
            Ok((score, effective_n)) => per_topic.push(TopicScore {
                topic,
                score,
                effective_n,
            }),
            Err(_) => skipped.push(topic),
        }
    }
    if per_topic.is_empty() {
        return Err(CoherenceError::AllTopicsSkipped);
    }
    let mean = per_topic.iter().map(|t| t.score).sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport {
        config_hash: None,
        model_id: model_id.to_string(),
        config: cfg.clone(),
        per_topic,
        mean,
        skipped,
    })
}

/// Counts windows only for the words the topics need, then scores them.
pub fn coherence_against(
    model_id: &str,
    topics: &[(usize, Vec<String>)],
    reference: &Corpus,
    cfg: &CoherenceConfig,
) -> Result<CoherenceReport, CoherenceError> {
    cfg.validate()?;
    let mut needed: Vec<WordId> = topics
        .iter()
        .flat_map(|(_, words)| topic_word_ids(words, reference.vocabulary(), cfg.top_n))
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let wc = window_counts_for(reference, cfg.window_s, &needed);
    model_coherence(model_id, topics, reference.vocabulary(), &wc, cfg)
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

    fn id(c: &Corpus, w: &str) -> WordId {
        c.vocabulary().id(w).unwrap()
    }

    #[test]
    fn sliding_windows_by_hand() {
        let c = corpus(&["a b c"]);
        let wc = window_counts(&c, 2);
        assert_eq!(wc.total_windows(), 2);
        assert_eq!(wc.single(id(&c, "b")), 2);
        assert_eq!(wc.pair(id(&c, "a"), id(&c, "b")), 1);
        assert_eq!(wc.pair(id(&c, "b"), id(&c, "a")), 1);
        assert_eq!(wc.pair(id(&c, "a"), id(&c, "c")), 0);
    }

    #[test]
    fn short_and_empty_documents() {
        let c = corpus(&["a b a", ""]);
        let wc = window_counts(&c, 10);
        assert_eq!(wc.total_windows(), 1);
        assert_eq!(wc.single(id(&c, "a")), 1);
    }

    #[test]
    fn restricted_counts_agree_with_full() {
        let c = corpus(&["a b c d a b", "c c d e", "e a"]);
        let full = window_counts(&c, 3);
        let ids = [id(&c, "a"), id(&c, "d")];
        let part = window_counts_for(&c, 3, &ids);
        assert_eq!(part.total_windows(), full.total_windows());
        for &a in &ids {
            assert_eq!(part.single(a), full.single(a));
            for &b in &ids {
                assert_eq!(part.pair(a, b), full.pair(a, b));
            }
        }
    }

    #[test]
    fn npmi_limits() {
        // a, b each in half the windows, never together
        let c = corpus(&["a", "b"]);
        let wc = window_counts(&c, 2);
        let (a, b) = (id(&c, "a"), id(&c, "b"));
        let eps: f64 = 1e-12;
        let expected = (eps / 0.25).ln() / -eps.ln();
        assert!((npmi(&wc, a, b, eps, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!(expected < -0.94);

        // a in every window
        let c = corpus(&["a b", "a c"]);
        let wc = window_counts(&c, 2);
        assert_eq!(npmi(&wc, id(&c, "a"), id(&c, "a"), 1e-12, 1.0), Some(1.0));

        // independence: P(a)=P(b)=0.5, P(a,b)=0.25
        let c = corpus(&["a b", "a x", "b y", "x y"]);
        let wc = window_counts(&c, 2);
        assert!(
            npmi(&wc, id(&c, "a"), id(&c, "b"), 1e-12, 1.0)
                .unwrap()
                .abs()
                < 1e-11
        );
    }

    #[test]
    fn npmi_symmetric_and_missing() {
        let c = corpus(&["a b c", "b c", "a d"]);
        let wc = window_counts_for(&c, 2, &[id(&c, "a"), id(&c, "b")]);
        let (a, b) = (id(&c, "a"), id(&c, "b"));
        assert_eq!(npmi(&wc, a, b, 1e-12, 1.0), npmi(&wc, b, a, 1e-12, 1.0));
        assert_eq!(npmi(&wc, a, id(&c, "d"), 1e-12, 1.0), None);
    }

    #[test]
    fn fractional_gamma_keeps_sign() {
        assert!((signed_pow(-0.25, 0.5) + 0.5).abs() < 1e-15);
        assert_eq!(signed_pow(-0.5, 2.0), 0.25);
    }

    #[test]
    fn always_together_scores_one() {
        let c = corpus(&["a b", "a b x", "y z", "z y x"]);
        let wc = window_counts(&c, 110);
        let (score, n) = topic_coherence(
            &["a", "b"],
            c.vocabulary(),
            &wc,
            &CoherenceConfig::default(),
        )
        .unwrap();
        assert_eq!(n, 2);
        assert!((score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singleton_confirms_itself() {
        let c = corpus(&["a b", "b c"]);
        let wc = window_counts(&c, 110);
        let s = coherence_of_ids(&[id(&c, "a")], &wc, &CoherenceConfig::default());
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_mean_and_skips() {
        let c = corpus(&["a b c", "a b", "c d", "d e a"]);
        let cfg = CoherenceConfig::default();
        let topics = vec![
            (0, vec!["a".to_string(), "b".to_string()]),
            (1, vec!["zzz".to_string(), "a".to_string()]),
            (2, vec!["c".to_string(), "d".to_string(), "e".to_string()]),
        ];
        let r = coherence_against("toy", &topics, &c, &cfg).unwrap();
        assert_eq!(r.skipped, vec![1]);
        assert_eq!(r.per_topic.len(), 2);
        let mean = (r.per_topic[0].score + r.per_topic[1].score) / 2.0;
        assert_eq!(r.mean, mean);
        assert_eq!(r.per_topic[1].effective_n, 3);

        let none = vec![(0, vec!["q".to_string()])];
        assert_eq!(
            coherence_against("toy", &none, &c, &cfg),
            Err(CoherenceError::AllTopicsSkipped)
        );
    }
}
