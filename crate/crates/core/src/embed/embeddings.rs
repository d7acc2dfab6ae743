//! Embedding file contract.
//!
//! A file holds a `docs` block and a `words` block, in either order. Each
//! block starts with a header line `EMB <count> <dim> <docs|words>` followed
//! by `count` rows `<id> <f1> ... <fdim>` (space separated, `.` decimal).
//! Rows are realigned to corpus document order and vocabulary id order.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("missing {kind} id {id:?}")]
    MissingId { kind: BlockKind, id: String },
    #[error("{kind} id {id:?} is not in the corpus")]
    UnknownId { kind: BlockKind, id: String },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: BlockKind, id: String },
    #[error("non-finite value in {kind} row {row}")]
    NonFiniteValue { kind: BlockKind, row: usize },
    #[error("embedding file has no {0} block")]
    MissingBlock(BlockKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Docs,
    Words,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Docs => "docs",
            BlockKind::Words => "words",
        })
    }
}

/// Document and word vectors in one embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub dim: usize,
    /// M×dim, corpus document order.
    pub doc_vectors: Array2<f64>,
    /// V×dim, vocabulary id order.
    pub word_vectors: Array2<f64>,
    /// Every row has unit L2 norm (within 1e-6).
    pub normalized: bool,
}

impl EmbeddingSet {
    pub fn new(
        doc_vectors: Array2<f64>,
        word_vectors: Array2<f64>,
    ) -> Result<Self, EmbeddingError> {
        let dim = doc_vectors.ncols();
        if word_vectors.ncols() != dim {
            return Err(EmbeddingError::DimensionMismatch(format!(
                "doc dim {dim} != word dim {}",
                word_vectors.ncols()
            )));
        }
        for (kind, m) in [
            (BlockKind::Docs, &doc_vectors),
            (BlockKind::Words, &word_vectors),
        ] {
            if let Some(row) = m
                .rows()
                .into_iter()
                .position(|r| r.iter().any(|x| !x.is_finite()))
            {
                return Err(EmbeddingError::NonFiniteValue { kind, row });
            }
        }
        let normalized = all_unit(&doc_vectors) && all_unit(&word_vectors);
        Ok(Self {
            dim,
            doc_vectors,
            word_vectors,
            normalized,
        })
    }

    /// L2-normalizes every row in place. Zero rows stay zero.
    pub fn normalize(&mut self) {
        for m in [&mut self.doc_vectors, &mut self.word_vectors] {
            for mut row in m.rows_mut() {
                let norm = row.dot(&row).sqrt();
                if norm > 0.0 {
                    row.mapv_inplace(|x| x / norm);
                }
            }
        }
        self.normalized = all_unit(&self.doc_vectors) && all_unit(&self.word_vectors);
    }
}

fn all_unit(m: &Array2<f64>) -> bool {
    m.rows()
        .into_iter()
        .all(|r| (r.dot(&r).sqrt() - 1.0).abs() <= 1e-6)
}

struct Block {
    dim: usize,
    rows: Vec<(String, Vec<f64>, usize)>,
}

fn parse_blocks<R: BufRead>(reader: R) -> Result<HashMap<&'static str, Block>, EmbeddingError> {
    let mut blocks: HashMap<&'static str, Block> = HashMap::new();
    let mut lines = reader.lines().enumerate();
    while let Some((i, line)) = lines.next() {
        let line_no = i + 1;
        let line = line.map_err(|source| EmbeddingError::Io {
            path: String::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |message: String| EmbeddingError::Parse {
            line: line_no,
            message,
        };
        if parts.len() != 4 || parts[0] != "EMB" {
            return Err(parse_err(format!(
                "expected `EMB <count> <dim> <docs|words>`, got {line:?}"
            )));
        }
        let count: usize = parts[1]
            .parse()
            .map_err(|_| parse_err("bad count".into()))?;
        let dim: usize = parts[2].parse().map_err(|_| parse_err("bad dim".into()))?;
        let kind = match parts[3] {
            "docs" => "docs",
            "words" => "words",
            other => return Err(parse_err(format!("unknown block kind {other:?}"))),
        };
        if blocks.contains_key(kind) {
            return Err(parse_err(format!("second {kind} block")));
        }
        let mut rows = Vec::with_capacity(count);
        for row in 0..count {
            let (j, line) = lines.next().ok_or_else(|| {
                EmbeddingError::DimensionMismatch(format!(
                    "{kind} header declares {count} rows, file ends after {row}"
                ))
            })?;
            let line = line.map_err(|source| EmbeddingError::Io {
                path: String::new(),
                source,
            })?;
            let mut fields = line.split_whitespace();
            let id = fields.next().ok_or_else(|| EmbeddingError::Parse {
                line: j + 1,
                message: "empty row".into(),
            })?;
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| EmbeddingError::Parse {
                        line: j + 1,
                        message: format!("bad float {f:?}"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if values.len() != dim {
                return Err(EmbeddingError::DimensionMismatch(format!(
                    "line {}: {} values, header dim {dim}",
                    j + 1,
                    values.len()
                )));
            }
            rows.push((id.to_string(), values, row));
        }
        blocks.insert(kind, Block { dim, rows });
    }
    Ok(blocks)
}

fn align<'a, I>(
    block: Block,
    kind: BlockKind,
    ids: I,
    expected: usize,
) -> Result<Array2<f64>, EmbeddingError>
where
    I: Iterator<Item = &'a str>,
{
    if block.rows.len() != expected {
        return Err(EmbeddingError::DimensionMismatch(format!(
            "{kind} block has {} rows, corpus has {expected}",
            block.rows.len()
        )));
    }
    let mut by_id: HashMap<String, (Vec<f64>, usize)> = HashMap::with_capacity(expected);
    for (id, values, row) in block.rows {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFiniteValue { kind, row });
        }
        if by_id.contains_key(&id) {
            return Err(EmbeddingError::DuplicateId { kind, id });
        }
        by_id.insert(id, (values, row));
    }
    let mut out = Array2::zeros((expected, block.dim));
    for (i, id) in ids.enumerate() {
        let (values, _) = by_id.remove(id).ok_or_else(|| EmbeddingError::MissingId {
            kind,
            id: id.to_string(),
        })?;
        out.row_mut(i).assign(&ndarray::ArrayView1::from(&values));
    }
    // counts match, so a leftover means an unknown id took a missing one's place
    if let Some(id) = by_id.into_keys().min() {
        return Err(EmbeddingError::UnknownId { kind, id });
    }
    Ok(out)
}

pub fn read_embeddings<R: BufRead>(
    reader: R,
    corpus: &Corpus,
) -> Result<EmbeddingSet, EmbeddingError> {
    let mut blocks = parse_blocks(reader)?;
    let docs = blocks
        .remove("docs")
        .ok_or(EmbeddingError::MissingBlock(BlockKind::Docs))?;
    let words = blocks
        .remove("words")
        .ok_or(EmbeddingError::MissingBlock(BlockKind::Words))?;
    if docs.dim != words.dim {
        return Err(EmbeddingError::DimensionMismatch(format!(
            "docs dim {} != words dim {}",
            docs.dim, words.dim
        )));
    }
    let doc_vectors = align(
        docs,
        BlockKind::Docs,
        corpus.documents().iter().map(|d| d.id.as_str()),
        corpus.num_documents(),
    )?;
    let word_vectors = align(
        words,
        BlockKind::Words,
        corpus.vocabulary().words().iter().map(String::as_str),
        corpus.vocab_size(),
    )?;
    EmbeddingSet::new(doc_vectors, word_vectors)
}

pub fn load_embeddings(path: &Path, corpus: &Corpus) -> Result<EmbeddingSet, EmbeddingError> {
    let file = std::fs::File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_embeddings(std::io::BufReader::new(file), corpus)
}

/// Writes one block. `decimals = None` prints shortest round-trip floats.
pub fn write_block<W: Write, S: AsRef<str>>(
    out: &mut W,
    kind: BlockKind,
    ids: &[S],
    vectors: &Array2<f64>,
    decimals: Option<usize>,
) -> std::io::Result<()> {
    writeln!(out, "EMB {} {} {kind}", ids.len(), vectors.ncols())?;
    for (id, row) in ids.iter().zip(vectors.rows()) {
        out.write_all(id.as_ref().as_bytes())?;
        for x in row {
            match decimals {
                Some(d) => write!(out, " {x:.d$}")?,
                None => write!(out, " {x}")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
