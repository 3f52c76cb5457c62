//! Least-squares regression from categorical typology features to a
//! unary constraint ratio.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One categorical value per feature; `None` is the explicit "missing"
/// level.
pub type FeatureVector = Vec<Option<String>>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnaryFit {
    /// Prediction clamped to `[0, 1]`.
    pub ratio: f64,
    /// True when the design was degenerate and the mean ratio was used.
    pub fallback: bool,
}

/// One-hot columns: `(feature position, level)` pairs seen in the data.
fn levels(rows: &[&FeatureVector]) -> Vec<(usize, Option<String>)> {
    let set: BTreeSet<(usize, Option<String>)> = rows
        .iter()
        .flat_map(|r| r.iter().cloned().enumerate())
        .collect();
    set.into_iter().collect()
}

fn encode(row: &FeatureVector, columns: &[(usize, Option<String>)]) -> Vec<f64> {
    columns
        .iter()
        .map(|(i, level)| if &row[*i] == level { 1.0 } else { 0.0 })
        .collect()
}

/// Minimum-norm least-squares prediction for `target`.
pub fn fit_unary_ratio(train: &[(FeatureVector, f64)], target: &FeatureVector) -> Result<UnaryFit> {
    if train.len() < 2 {
        return Err(Error::Compile(format!(
            "regression needs at least 2 training points, got {}",
            train.len()
        )));
    }
    let width = target.len();
    if let Some((row, _)) = train.iter().find(|(row, _)| row.len() != width) {
        return Err(Error::Compile(format!(
            "feature vector of length {} does not match target length {width}",
            row.len()
        )));
    }
    if let Some((_, r)) = train.iter().find(|(_, r)| !(0.0..=1.0).contains(r)) {
        return Err(Error::Compile(format!("training ratio {r} outside [0, 1]")));
    }

    let mean = train.iter().map(|(_, r)| r).sum::<f64>() / train.len() as f64;
    let fallback = UnaryFit {
        ratio: mean.clamp(0.0, 1.0),
        fallback: true,
    };

    let mut rows: Vec<&FeatureVector> = train.iter().map(|(f, _)| f).collect();
    rows.push(target);
    let columns = levels(&rows);
    if columns.is_empty() {
        return Ok(fallback);
    }

    let design = DMatrix::from_row_iterator(
        train.len(),
        columns.len(),
        train.iter().flat_map(|(f, _)| encode(f, &columns)),
    );
    let y = DVector::from_iterator(train.len(), train.iter().map(|(_, r)| *r));

    let svd = design.svd(true, true);
    let tolerance = 1e-10 * svd.singular_values.max().max(1.0);
    if svd.rank(tolerance) == 0 {
        return Ok(fallback);
    }
    let coefficients = match svd.solve(&y, tolerance) {
        Ok(c) => c,
        Err(_) => return Ok(fallback),
    };
    let x = DVector::from_vec(encode(target, &columns));
    let prediction = x.dot(&coefficients);
    if !prediction.is_finite() {
        return Ok(fallback);
    }
    Ok(UnaryFit {
        ratio: prediction.clamp(0.0, 1.0),
        fallback: false,
    })
}
