//! Unigram/bigram/trigram frequency tables. N-grams never span documents.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::{Corpus, WordId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NgramTable {
    pub n: usize,
    /// Ranked by count descending, ties by the lexicographic order of the
    /// token tuple.
    pub entries: Vec<(Vec<String>, u64)>,
    /// Total n-gram occurrences in the corpus, Σ_d max(0, N_d − n + 1).
    pub total: u64,
}

/// Counts all n-grams in the corpus.
pub fn count_ngrams(corpus: &Corpus, n: usize) -> HashMap<&[WordId], u64> {
    assert!((1..=3).contains(&n), "n must be 1, 2 or 3");
    let mut counts: HashMap<&[WordId], u64> = HashMap::new();
    for doc in corpus.documents() {
        for gram in doc.tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub fn top_ngrams(corpus: &Corpus, n: usize, k: usize) -> NgramTable {
    let counts = count_ngrams(corpus, n);
    let total = counts.values().sum();
    let vocab = corpus.vocabulary();
    let mut entries: Vec<(Vec<&str>, u64)> = counts
        .into_iter()
        .map(|(gram, c)| (vocab.decode(gram), c))
        .collect();
    entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    NgramTable {
        n,
        entries: entries
            .into_iter()
            .map(|(g, c)| (g.into_iter().map(str::to_string).collect(), c))
            .collect(),
        total,
    }
}

impl NgramTable {
    /// `rank,ngram,count` with 1-based ranks and space-joined n-grams.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "ngram", "count"])?;
        for (i, (gram, count)) in self.entries.iter().enumerate() {
            w.write_record([(i + 1).to_string(), gram.join(" "), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(docs: &[&str]) -> Corpus {
        let docs: Vec<(String, Vec<&str>)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (i.to_string(), d.split_whitespace().collect()))
            .collect();
        Corpus::from_tokens(&docs).unwrap()
    }

    fn gram(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn bigram_hand_count() {
        let t = top_ngrams(&corpus(&["a b a b"]), 2, 2);
        assert_eq!(t.entries, vec![(gram("a b"), 2), (gram("b a"), 1)]);
        assert_eq!(t.total, 3);
    }

    #[test]
    fn unigram_conservation() {
        let c = corpus(&["x y z x", "y y", ""]);
        let t = top_ngrams(&c, 1, c.vocab_size());
        let sum: u64 = t.entries.iter().map(|e| e.1).sum();
        assert_eq!(sum, c.num_tokens() as u64);
        assert_eq!(t.total, 6);
    }

    #[test]
    fn no_cross_document_grams() {
        let t = top_ngrams(&corpus(&["a", "b", ""]), 2, 10);
        assert!(t.entries.is_empty());
        assert_eq!(t.total, 0);
    }

    #[test]
    fn prefix_stable() {
        let c = corpus(&["a b c a b c d", "c d a b", "b b b"]);
        for n in 1..=3 {
            let all = top_ngrams(&c, n, usize::MAX);
            for k in 1..all.entries.len() {
                assert_eq!(top_ngrams(&c, n, k).entries, all.entries[..k]);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let t = top_ngrams(&corpus(&["a b a b"]), 2, 2);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rank,ngram,count\n1,a b,2\n2,b a,1\n"
        );
    }
}
