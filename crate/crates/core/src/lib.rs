//! Short-text topic modelling toolkit.
//!
//! Three model families share one integer-indexed [`corpus::Corpus`]:
//! collapsed-Gibbs [`lda`], the one-topic-per-document [`gsdmm`] mixture,
//! and the embedding-cluster pipeline in [`embed`] (reduction, HDBSCAN,
//! centroid topic vectors, hierarchical topic reduction). Fitted models are
//! scored with NPMI-based [`coherence`] and compared across corpora with
//! cosine [`align`]ment matrices. The [`cli`] module wires everything into
//! the `topicforge` executable.

pub mod align;
pub mod cli;
pub mod coherence;
pub mod corpus;
pub mod embed;
pub mod gsdmm;
pub mod io;
pub mod lda;
pub mod ngrams;
pub mod synth;

mod ranking;

pub use corpus::{Corpus, Document, PreprocessConfig, RawDocument, Vocabulary};
