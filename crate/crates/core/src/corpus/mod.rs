//! Raw documents, preprocessing, and the integer-indexed corpus shared by
//! every model.

pub mod emoji;
mod preprocess;
pub mod stem;

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use preprocess::{
    builtin_stopwords, parse_stopwords, preprocess, PreprocessConfig, Preprocessor,
    STOPWORDS_VERSION,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("empty document id on line {0}")]
    EmptyId(usize),
    #[error("no documents given")]
    NoDocuments,
    #[error("no token survived preprocessing in any document")]
    AllDocumentsEmpty,
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

/// One input record. Only the id, text and optional timestamp are kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

pub type WordId = u32;

/// Ordered set of distinct words; ids are positions `0..len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as WordId).is_some() {
                return Err(CorpusError::Invalid(format!(
                    "duplicate vocabulary word {w:?}"
                )));
            }
        }
        Ok(Self { words, index })
    }

    fn intern(&mut self, word: &str) -> WordId {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len() as WordId;
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    /// Maps tokens to ids; `None` if any token is out of vocabulary.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Option<Vec<WordId>> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[WordId]) -> Vec<&str> {
        ids.iter().map(|&i| self.word(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<WordId>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
}

impl Corpus {
    /// Assembles a corpus, checking that it has documents, a non-empty
    /// vocabulary, and only in-range token ids.
    pub fn new(documents: Vec<Document>, vocabulary: Vocabulary) -> Result<Self, CorpusError> {
        if documents.is_empty() {
            return Err(CorpusError::NoDocuments);
        }
        if vocabulary.is_empty() {
            return Err(CorpusError::AllDocumentsEmpty);
        }
        let v = vocabulary.len() as WordId;
        for doc in &documents {
            if let Some(bad) = doc.tokens.iter().find(|&&t| t >= v) {
                return Err(CorpusError::Invalid(format!(
                    "document {:?} references word id {bad} but V={v}",
                    doc.id
                )));
            }
        }
        Ok(Self {
            documents,
            vocabulary,
        })
    }

    /// Builds a corpus from already-tokenized documents.
    pub fn from_tokens<S: AsRef<str>>(docs: &[(String, Vec<S>)]) -> Result<Self, CorpusError> {
        if docs.is_empty() {
            return Err(CorpusError::NoDocuments);
        }
        let mut vocabulary = Vocabulary::default();
        let documents = docs
            .iter()
            .map(|(id, tokens)| Document {
                id: id.clone(),
                tokens: tokens
                    .iter()
                    .map(|t| vocabulary.intern(t.as_ref()))
                    .collect(),
            })
            .collect();
        Self::new(documents, vocabulary)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// M, the document count.
    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    /// V, the vocabulary size.
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    pub fn to_file(&self, config_hash: Option<String>) -> CorpusFile {
        CorpusFile {
            config_hash,
            vocabulary: self.vocabulary.words.clone(),
            documents: self.documents.clone(),
        }
    }

    pub fn from_file(file: CorpusFile) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for doc in &file.documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
        }
        Self::new(file.documents, Vocabulary::from_words(file.vocabulary)?)
    }

    pub fn load_json(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: CorpusFile = serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }
}

/// On-disk corpus: `{vocabulary: [...], documents: [{id, tokens}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub vocabulary: Vec<String>,
    pub documents: Vec<Document>,
}

/// Preprocesses every document (in parallel) and interns the surviving
/// tokens. The vocabulary lists words in first-occurrence order.
pub fn build_corpus(docs: &[RawDocument], cfg: &PreprocessConfig) -> Result<Corpus, CorpusError> {
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    cfg.validate()?;
    let pre = Preprocessor::new(cfg);
    let tokenized: Vec<Vec<String>> = docs.par_iter().map(|d| pre.tokens(&d.text)).collect();
    if tokenized.iter().all(Vec::is_empty) {
        return Err(CorpusError::AllDocumentsEmpty);
    }
    let mut vocabulary = Vocabulary::default();
    let documents = docs
        .iter()
        .zip(&tokenized)
        .map(|(raw, tokens)| Document {
            id: raw.id.clone(),
            tokens: tokens.iter().map(|t| vocabulary.intern(t)).collect(),
        })
        .collect();
    Corpus::new(documents, vocabulary)
}

/// Reads one JSON object per line (`id`, `text`, optional `timestamp`).
/// Blank lines are skipped; line numbers in errors are 1-based.
pub fn load_corpus_jsonl(path: &Path) -> Result<Vec<RawDocument>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_jsonl(std::io::BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: String::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if doc.id.is_empty() {
            return Err(CorpusError::EmptyId(line_no));
        }
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}
