//! 2-D scatter export: `doc_id,x,y,topic` with noise written as `-1`.

use std::io::{Read, Write};

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScatterError {
    #[error("scatter export needs at least 2 reduced dimensions, got {0}")]
    TooFewDimensions(usize),
    #[error("{ids} document ids for {rows} rows")]
    LengthMismatch { ids: usize, rows: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad scatter row {row}: {message}")]
    Parse { row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub doc_id: String,
    pub x: f64,
    pub y: f64,
    pub topic: Option<usize>,
}

/// Floats use the shortest representation that round-trips exactly.
pub fn write_scatter<W: Write, S: AsRef<str>>(
    out: W,
    doc_ids: &[S],
    reduced: &Array2<f64>,
    labels: &[Option<usize>],
) -> Result<(), ScatterError> {
    if reduced.ncols() < 2 {
        return Err(ScatterError::TooFewDimensions(reduced.ncols()));
    }
    if doc_ids.len() != reduced.nrows() || labels.len() != reduced.nrows() {
        return Err(ScatterError::LengthMismatch {
            ids: doc_ids.len(),
            rows: reduced.nrows(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["doc_id", "x", "y", "topic"])?;
    for ((id, row), label) in doc_ids.iter().zip(reduced.rows()).zip(labels) {
        let topic = label.map_or_else(|| "-1".to_string(), |t| t.to_string());
        w.write_record([
            id.as_ref(),
            &row[0].to_string(),
            &row[1].to_string(),
            &topic,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_scatter<R: Read>(input: R) -> Result<Vec<ScatterRow>, ScatterError> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |message: &str| ScatterError::Parse {
            row: i + 1,
            message: message.to_string(),
        };
        if rec.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let x = rec[1].parse().map_err(|_| bad("bad x"))?;
        let y = rec[2].parse().map_err(|_| bad("bad y"))?;
        let topic: i64 = rec[3].parse().map_err(|_| bad("bad topic"))?;
        rows.push(ScatterRow {
            doc_id: rec[0].to_string(),
            x,
            y,
            topic: usize::try_from(topic).ok(),
        });
    }
    Ok(rows)
}
