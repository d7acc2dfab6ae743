//! Seeded generator for the bundled embedding-cluster fixtures.
//!
//! Each planted topic owns a group of made-up words and a random unit
//! direction. Documents mix words from their topic group with shared
//! background words (with some URLs, mentions, hashtags and punctuation to
//! exercise preprocessing); document and topic-word vectors are the topic
//! direction plus Gaussian noise.

use std::collections::{BTreeSet, HashSet};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{builtin_stopwords, RawDocument};
use crate::embed::embeddings::{write_block, BlockKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub topics: usize,
    pub docs_per_topic: usize,
    pub words_per_topic: usize,
    pub background_words: usize,
    pub dim: usize,
    /// Per-coordinate noise standard deviation.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            topics: 12,
            docs_per_topic: 30,
            words_per_topic: 25,
            background_words: 40,
            dim: 32,
            noise: 0.1,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthFixture {
    pub documents: Vec<RawDocument>,
    /// Planted topic of each document.
    pub labels: Vec<usize>,
    /// Word groups per topic; the last entry is the background group.
    pub groups: Vec<Vec<String>>,
    /// Embedding file text covering every word that occurs.
    pub embeddings: String,
}

impl SynthFixture {
    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.documents {
            out.push_str(&serde_json::to_string(d).expect("plain struct serializes"));
            out.push('\n');
        }
        out
    }
}

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn made_up_words(n: usize, rng: &mut ChaCha8Rng, taken: &mut HashSet<String>) -> Vec<String> {
    let stop = builtin_stopwords();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        if !stop.contains(&w) && taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn unit(dim: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let n = Normal::new(0.0, 1.0).expect("valid normal");
    let v: Array1<f64> = Array1::from_shape_fn(dim, |_| n.sample(rng));
    let norm = v.dot(&v).sqrt();
    v / norm
}

pub fn generate(cfg: &SynthConfig) -> SynthFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise).expect("valid noise");
    let mut taken = HashSet::new();
    let mut groups: Vec<Vec<String>> = (0..cfg.topics)
        .map(|_| made_up_words(cfg.words_per_topic, &mut rng, &mut taken))
        .collect();
    groups.push(made_up_words(cfg.background_words, &mut rng, &mut taken));
    let centers: Vec<Array1<f64>> = (0..cfg.topics).map(|_| unit(cfg.dim, &mut rng)).collect();

    let mut planned: Vec<usize> = (0..cfg.topics)
        .flat_map(|t| std::iter::repeat_n(t, cfg.docs_per_topic))
        .collect();
    planned.shuffle(&mut rng);

    let mut documents = Vec::with_capacity(planned.len());
    let mut doc_vectors = Array2::zeros((planned.len(), cfg.dim));
    let mut used: BTreeSet<String> = BTreeSet::new();
    for (i, &t) in planned.iter().enumerate() {
        let len = rng.random_range(8..=14);
        let mut words: Vec<String> = (0..len)
            .map(|_| {
                let group = if rng.random_bool(0.7) {
                    &groups[t]
                } else {
                    &groups[cfg.topics]
                };
                group[rng.random_range(0..group.len())].clone()
            })
            .collect();
        used.extend(words.iter().cloned());
        if rng.random_bool(0.3) {
            let j = rng.random_range(0..words.len());
            words[j] = format!("#{}", words[j]);
        }
        if let Some(first) = words.first_mut() {
            if rng.random_bool(0.5) {
                *first = first.to_uppercase();
            }
        }
        let mut text = words.join(" ");
        if rng.random_bool(0.2) {
            text.push_str(&format!(" https://t.co/{:08x}", rng.random::<u32>()));
        }
        if rng.random_bool(0.2) {
            text = format!("@user{} {text}", rng.random_range(0..100));
        }
        if rng.random_bool(0.5) {
            text.push('!');
        }
        documents.push(RawDocument {
            id: format!("doc{i:04}"),
            text,
            timestamp: None,
        });
        let v = &centers[t] + &Array1::from_shape_fn(cfg.dim, |_| noise.sample(&mut rng));
        doc_vectors.row_mut(i).assign(&v);
    }

    let words: Vec<String> = used.into_iter().collect();
    let mut word_vectors = Array2::zeros((words.len(), cfg.dim));
    for (i, w) in words.iter().enumerate() {
        let base = match groups[..cfg.topics].iter().position(|g| g.contains(w)) {
            Some(t) => centers[t].clone(),
            None => unit(cfg.dim, &mut rng),
        };
        let v = base + Array1::from_shape_fn(cfg.dim, |_| noise.sample(&mut rng));
        word_vectors.row_mut(i).assign(&v);
    }

    let ids: Vec<&str> = documents.iter().map(|d| d.id.as_str()).collect();
    let mut buf = Vec::new();
    write_block(&mut buf, BlockKind::Docs, &ids, &doc_vectors, Some(6)).expect("write to memory");
    write_block(&mut buf, BlockKind::Words, &words, &word_vectors, Some(6))
        .expect("write to memory");
    SynthFixture {
        documents,
        labels: planned,
        groups,
        embeddings: String::from_utf8(buf).expect("ascii output"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, PreprocessConfig};
    use crate::embed::read_embeddings;

    #[test]
    fn fixture_loads_against_its_corpus() {
        let cfg = SynthConfig {
            topics: 3,
            docs_per_topic: 10,
            dim: 8,
            ..SynthConfig::default()
        };
        let fx = generate(&cfg);
        let corpus = build_corpus(&fx.documents, &PreprocessConfig::default()).unwrap();
        let emb = read_embeddings(fx.embeddings.as_bytes(), &corpus).unwrap();
        assert_eq!(emb.doc_vectors.nrows(), 30);
        assert_eq!(emb.word_vectors.nrows(), corpus.vocab_size());
        assert_eq!(generate(&cfg).embeddings, fx.embeddings);
    }
}
