//! JSON-lines score files: one `{"sent_id", "n", "scores"}` object per
//! sentence, `n + 1` rows (heads) of `n` columns (dependents). Self-arc
//! positions are written as `null` and ignored on read.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::ScoreMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ScoreLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sent_id: Option<String>,
    n: usize,
    scores: Vec<Vec<Option<f64>>>,
}

pub fn read_scores<R: BufRead>(reader: R) -> Result<Vec<ScoreMatrix>> {
    Ok(read_scores_with_ids(reader)?
        .into_iter()
        .map(|(_, m)| m)
        .collect())
}

/// Like [`read_scores`], also returning each line's `sent_id` if present.
pub fn read_scores_with_ids<R: BufRead>(reader: R) -> Result<Vec<(Option<String>, ScoreMatrix)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Scores {
            line: line_no,
            message,
        };
        let parsed: ScoreLine = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let n = parsed.n;
        if n == 0 {
            return Err(err("n must be at least 1".into()));
        }
        if parsed.scores.len() != n + 1 {
            return Err(err(format!(
                "expected {} rows, got {}",
                n + 1,
                parsed.scores.len()
            )));
        }
        let mut rows = Vec::with_capacity(n + 1);
        for (head, row) in parsed.scores.iter().enumerate() {
            if row.len() != n {
                return Err(err(format!(
                    "row {head}: expected {n} columns, got {}",
                    row.len()
                )));
            }
            let mut values = Vec::with_capacity(n);
            for (c, v) in row.iter().enumerate() {
                let dep = c + 1;
                match v {
                    _ if head == dep => values.push(f64::NEG_INFINITY),
                    Some(x) if x.is_finite() => values.push(*x),
                    _ => {
                        return Err(err(format!(
                            "non-finite score at head {head}, dependent {dep}"
                        )))
                    }
                }
            }
            rows.push(values);
        }
        let m = ScoreMatrix::from_rows(n, &rows).map_err(|e| err(e.to_string()))?;
        out.push((parsed.sent_id, m));
    }
    Ok(out)
}

pub fn write_scores<W: Write>(
    mut writer: W,
    matrices: &[ScoreMatrix],
    ids: Option<&[String]>,
) -> Result<()> {
    for (k, m) in matrices.iter().enumerate() {
        let n = m.n();
        let scores = (0..=n)
            .map(|h| {
                (1..=n)
                    .map(|d| if h == d { None } else { Some(m.get(h, d)) })
                    .collect()
            })
            .collect();
        let line = ScoreLine {
            sent_id: ids.and_then(|ids| ids.get(k).cloned()),
            n,
            scores,
        };
        serde_json::to_writer(&mut writer, &line)?;
        writeln!(writer)?;
    }
    Ok(())
}
