//! Cross-model topic alignment: cosine similarity matrices, per-row best
//! matches and heatmap CSV export.
//!
//! Cosine similarity lies in `[-1, 1]`; nothing is clamped. Count models
//! (LDA, GSDMM) have no embedding-space topic vectors, so they are compared
//! through `1 - JS distance` between their topic-word distributions.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("similarity matrix is empty")]
    EmptyMatrix,
    #[error("heatmap parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, AlignError> {
    cosine_view(ArrayView1::from(u), ArrayView1::from(v))
}

pub(crate) fn cosine_view(u: ArrayView1<f64>, v: ArrayView1<f64>) -> Result<f64, AlignError> {
    if u.len() != v.len() {
        return Err(AlignError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(AlignError::ZeroVector);
    }
    Ok(u.dot(&v) / (nu * nv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    /// Topic ids of the row model.
    pub rows: Vec<usize>,
    /// Topic ids of the column model.
    pub cols: Vec<usize>,
    /// `rows.len() × cols.len()`, row-major.
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn transpose(&self) -> Self {
        let values = (0..self.cols.len())
            .map(|j| self.values.iter().map(|row| row[j]).collect())
            .collect();
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            values,
        }
    }
}

/// Cosine similarity between every selected row of `a` and of `b`.
/// `a_ids` / `b_ids` index rows of the respective matrices.
pub fn similarity_matrix(
    a: &Array2<f64>,
    a_ids: &[usize],
    b: &Array2<f64>,
    b_ids: &[usize],
) -> Result<SimilarityMatrix, AlignError> {
    if a.ncols() != b.ncols() {
        return Err(AlignError::DimensionMismatch {
            left: a.ncols(),
            right: b.ncols(),
        });
    }
    let values = a_ids
        .iter()
        .map(|&i| {
            b_ids
                .iter()
                .map(|&j| cosine_view(a.row(i), b.row(j)))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimilarityMatrix {
        rows: a_ids.to_vec(),
        cols: b_ids.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestMatch {
    pub row: usize,
    pub col: usize,
    pub score: f64,
}

/// Argmax per row; ties go to the earliest column.
pub fn best_matches(m: &SimilarityMatrix) -> Result<Vec<BestMatch>, AlignError> {
    if m.rows.is_empty() || m.cols.is_empty() {
        return Err(AlignError::EmptyMatrix);
    }
    Ok(m.values
        .iter()
        .zip(&m.rows)
        .map(|(row, &r)| {
            let mut best = 0;
            for (j, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = j;
                }
            }
            BestMatch {
                row: r,
                col: m.cols[best],
                score: row[best],
            }
        })
        .collect())
}

/// Header `topic,<col ids>`, then one line per row topic, 6 decimals.
pub fn write_heatmap_csv<W: Write>(m: &SimilarityMatrix, mut out: W) -> std::io::Result<()> {
    write!(out, "topic")?;
    for c in &m.cols {
        write!(out, ",{c}")?;
    }
    writeln!(out)?;
    for (r, row) in m.rows.iter().zip(&m.values) {
        write!(out, "{r}")?;
        for x in row {
            write!(out, ",{x:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_heatmap_csv<R: BufRead>(reader: R) -> Result<SimilarityMatrix, AlignError> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, message: String| AlignError::Parse { line, message };
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        _ => return Err(parse_err(1, "missing header".into())),
    };
    let mut fields = header.split(',');
    if fields.next() != Some("topic") {
        return Err(parse_err(1, "header must start with `topic`".into()));
    }
    let cols = fields
        .map(|f| {
            f.parse()
                .map_err(|_| parse_err(1, format!("bad column id {f:?}")))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default();
        rows.push(
            id.parse()
                .map_err(|_| parse_err(i + 1, format!("bad row id {id:?}")))?,
        );
        let row = fields
            .map(|f| {
                f.parse()
                    .map_err(|_| parse_err(i + 1, format!("bad value {f:?}")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != cols.len() {
            return Err(parse_err(
                i + 1,
                format!("{} values for {} columns", row.len(), cols.len()),
            ));
        }
        values.push(row);
    }
    Ok(SimilarityMatrix { rows, cols, values })
}

/// Jensen-Shannon distance (square root of the base-2 divergence), in `[0, 1]`.
pub fn js_distance(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            d += 0.5 * a * (a / m).log2();
        }
        if b > 0.0 {
            d += 0.5 * b * (b / m).log2();
        }
    }
    d.max(0.0).sqrt()
}

/// `1 - JS distance` between topic-word distributions of two count models,
/// laid out on the union of their vocabularies.
pub fn js_similarity_matrix(
    a: &[Vec<f64>],
    a_vocab: &[String],
    a_ids: &[usize],
    b: &[Vec<f64>],
    b_vocab: &[String],
    b_ids: &[usize],
) -> SimilarityMatrix {
    let mut union: BTreeMap<&str, usize> = BTreeMap::new();
    for w in a_vocab.iter().chain(b_vocab) {
        union.entry(w.as_str()).or_insert(0);
    }
    for (i, slot) in union.values_mut().enumerate() {
        *slot = i;
    }
    let spread = |row: &[f64], vocab: &[String]| {
        let mut out = vec![0.0; union.len()];
        for (p, w) in row.iter().zip(vocab) {
            out[union[w.as_str()]] = *p;
        }
        out
    };
    let a_rows: Vec<Vec<f64>> = a_ids.iter().map(|&i| spread(&a[i], a_vocab)).collect();
    let b_rows: Vec<Vec<f64>> = b_ids.iter().map(|&j| spread(&b[j], b_vocab)).collect();
    let values = a_rows
        .iter()
        .map(|p| b_rows.iter().map(|q| 1.0 - js_distance(p, q)).collect())
        .collect();
    SimilarityMatrix {
        rows: a_ids.to_vec(),
        cols: b_ids.to_vec(),
        values,
    }
}

/// The `top` largest topics by size (ties to the smaller id), returned in id
/// order. Topics of size 0 are never selected.
pub fn select_largest(sizes: &[usize], top: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..sizes.len()).filter(|&t| sizes[t] > 0).collect();
    ids.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    ids.truncate(top);
    ids.sort_unstable();
    ids
}

/// One row of a best-match report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub row_topic: usize,
    pub row_top_words: Vec<String>,
    pub best_col_topic: usize,
    pub col_top_words: Vec<String>,
    pub score: f64,
}

pub fn match_rows<F, G>(matches: &[BestMatch], row_words: F, col_words: G) -> Vec<MatchRow>
where
    F: Fn(usize) -> Vec<String>,
    G: Fn(usize) -> Vec<String>,
{
    matches
        .iter()
        .map(|m| MatchRow {
            row_topic: m.row,
            row_top_words: row_words(m.row),
            best_col_topic: m.col,
            col_top_words: col_words(m.col),
            score: m.score,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(
            (cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs()
                < 1e-12
        );
        assert_eq!(
            cosine(&[0.0, 0.0], &[1.0, 1.0]),
            Err(AlignError::ZeroVector)
        );
        assert_eq!(
            cosine(&[1.0], &[1.0, 1.0]),
            Err(AlignError::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn best_match_tie_goes_left() {
        let m = SimilarityMatrix {
            rows: vec![0],
            cols: vec![0, 1, 2],
            values: vec![vec![0.2, 0.9, 0.9]],
        };
        assert_eq!(best_matches(&m).unwrap()[0].col, 1);
    }

    #[test]
    fn self_alignment() {
        let a = array![[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [-1.0, 0.5, 2.0]];
        let m = similarity_matrix(&a, &[0, 1, 2], &a, &[0, 1, 2]).unwrap();
        for i in 0..3 {
            assert!((m.values[i][i] - 1.0).abs() < 1e-12);
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
        let best = best_matches(&m).unwrap();
        assert!(best.iter().all(|b| b.row == b.col));
    }

    #[test]
    fn heatmap_round_trip() {
        let m = SimilarityMatrix {
            rows: vec![2, 5],
            cols: vec![0, 1, 7],
            values: vec![vec![0.1234567, -1.0, 0.5], vec![1.0, 0.0, -0.25]],
        };
        let mut buf = Vec::new();
        write_heatmap_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("topic,0,1,7\n2,0.123457,-1.000000,0.500000\n"));
        let back = read_heatmap_csv(buf.as_slice()).unwrap();
        assert_eq!(
            (back.rows.clone(), back.cols.clone()),
            (m.rows.clone(), m.cols.clone())
        );
        for (r, s) in back.values.iter().zip(&m.values) {
            for (x, y) in r.iter().zip(s) {
                assert!((x - y).abs() <= 5e-7);
            }
        }
    }

    #[test]
    fn js_bounds() {
        assert_eq!(js_distance(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!((js_distance(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        let vocab_a = vec!["x".to_string(), "y".to_string()];
        let vocab_b = vec!["y".to_string(), "x".to_string()];
        let m = js_similarity_matrix(
            &[vec![0.3, 0.7]],
            &vocab_a,
            &[0],
            &[vec![0.7, 0.3]],
            &vocab_b,
            &[0],
        );
        assert!((m.values[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn largest_topics_in_id_order() {
        assert_eq!(select_largest(&[5, 9, 5, 0, 9, 1], 3), vec![0, 1, 4]);
        assert_eq!(select_largest(&[0, 2], 10), vec![1]);
    }
}
