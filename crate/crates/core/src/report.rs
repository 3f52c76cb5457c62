//! Run reports and iteration traces.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraints::{self, Constraint};
use crate::corpus::{Corpus, ParseTree};
use crate::error::Result;
use crate::lagrangian::LrIteration;
use crate::posterior::PrIteration;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub id: String,
    pub r: f64,
    pub theta: f64,
    pub ratio_baseline: Option<f64>,
    pub ratio_final: Option<f64>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverallReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uas: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub method: String,
    pub constraints: Vec<ConstraintReport>,
    pub overall: OverallReport,
}

impl Report {
    /// Ratios of the baseline and final trees against every constraint.
    pub fn build(
        method: &str,
        corpus: &Corpus,
        constraints: &[Constraint],
        baseline: &[ParseTree],
        trees: &[ParseTree],
        iterations: usize,
        converged: bool,
    ) -> Result<Report> {
        let mut rows = Vec::with_capacity(constraints.len());
        for c in constraints {
            let ratio_final = constraints::ratio(c, corpus, trees)?;
            rows.push(ConstraintReport {
                id: c.id().to_string(),
                r: c.r(),
                theta: c.theta(),
                ratio_baseline: constraints::ratio(c, corpus, baseline)?,
                ratio_final,
                satisfied: constraints::is_satisfied(c, ratio_final),
            });
        }
        let uas = match corpus.gold_trees() {
            Some(_) => Some(crate::eval::uas(trees, corpus.sentences())?),
            None => None,
        };
        Ok(Report {
            method: method.to_string(),
            constraints: rows,
            overall: OverallReport {
                uas,
                objective: corpus.objective(trees),
                iterations,
                converged,
            },
        })
    }
}

/// Write `contents` to a temporary sibling and rename it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn write_report<W: Write>(mut writer: W, report: &Report) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writeln!(writer)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per iteration and constraint.
pub fn write_lr_trace<W: Write>(writer: W, constraints: &[Constraint], trace: &[LrIteration]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["iter", "constraint_id", "r_target", "r_measured", "lambda", "alpha", "objective"])?;
    for it in trace {
        for (i, c) in constraints.iter().enumerate() {
            csv.write_record([
                it.iter.to_string(),
                c.id().to_string(),
                c.r().to_string(),
                fmt_opt(it.measured[i]),
                it.lambda[i].to_string(),
                it.alpha.to_string(),
                it.objective.to_string(),
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// One row per iteration, with a column per dual component named
/// `<id>_upper` / `<id>_lower`.
pub fn write_pr_trace<W: Write>(writer: W, constraints: &[Constraint], trace: &[PrIteration]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["iter".to_string(), "grad_norm".to_string(), "neg_log_Z".to_string()];
    for c in constraints {
        header.push(format!("{}_upper", c.id()));
        header.push(format!("{}_lower", c.id()));
    }
    csv.write_record(&header)?;
    for it in trace {
        let mut row = vec![it.iter.to_string(), it.grad_norm.to_string(), it.neg_log_z.to_string()];
        row.extend(it.lambda.iter().map(f64::to_string));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}
