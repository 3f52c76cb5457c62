//! Constrained decoding by Lagrangian relaxation.
//!
//! Each constraint `R(C, Y) = r` is rewritten as the arc-linear identity
//! `(1 - r)·|Plus| - r·|Minus| = 0`. Adding `λ` times its left-hand side to
//! the objective only reweights arcs, so for fixed multipliers the corpus
//! problem splits into independent per-sentence decodes. Multipliers follow
//! the ratio error with a decaying step size until every constraint is
//! within its margin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{self, ArcClass, Constraint};
use crate::corpus::{Corpus, ParseTree, ScoreMatrix, Sentence};
use crate::decoder::{decode, DecodeOptions};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// `λ ← λ + α (r - r̂)`
    #[default]
    Accumulate,
    /// `λ ← α (r̂ - r)`, kept for comparison only.
    Overwrite,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrBatch {
    /// Every iteration decodes the whole corpus.
    #[default]
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub alpha0: f64,
    pub eta: f64,
    pub max_iter: usize,
    pub batch: LrBatch,
    pub update: UpdateRule,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            alpha0: 50.0,
            eta: 0.9,
            max_iter: 60,
            batch: LrBatch::Full,
            update: UpdateRule::Accumulate,
        }
    }
}

impl LrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::Param(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Param(format!("eta must be in (0, 1], got {}", self.eta)));
        }
        if self.max_iter == 0 {
            return Err(Error::Param("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One decode of the relaxed problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LrIteration {
    pub iter: usize,
    /// Multipliers the decode used.
    pub lambda: Vec<f64>,
    /// Step size applied after this decode.
    pub alpha: f64,
    pub measured: Vec<Option<f64>>,
    /// Unaugmented score of the decoded trees.
    pub objective: f64,
    /// `max_Y L(Y, λ)`: augmented score of the decoded trees.
    pub dual_value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub trace: Vec<LrIteration>,
}

#[derive(Clone, Debug)]
pub struct LrOutcome {
    pub trees: Vec<ParseTree>,
    pub state: DualState,
    pub converged: bool,
    /// Trace index of the returned trees.
    pub selected: usize,
}

/// Arc coefficient of one constraint's relaxed term.
fn coefficient(c: &Constraint, class: ArcClass) -> f64 {
    match class {
        ArcClass::Plus => 1.0 - c.r(),
        ArcClass::Minus => -c.r(),
        ArcClass::Neither => 0.0,
    }
}

/// Scores with each arc shifted by `Σ λ_c · coef_c(arc)`, where `coef` is
/// `1 - r` on Plus arcs, `-r` on Minus arcs and 0 elsewhere.
pub fn augment_scores(
    m: &ScoreMatrix,
    s: &Sentence,
    constraints: &[Constraint],
    lambda: &[f64],
) -> ScoreMatrix {
    assert_eq!(constraints.len(), lambda.len(), "one multiplier per constraint");
    ScoreMatrix::from_fn(m.n(), |h, d| {
        let shift: f64 = constraints
            .iter()
            .zip(lambda)
            .map(|(c, &l)| if l == 0.0 { 0.0 } else { l * coefficient(c, c.class_of(s, h, d)) })
            .sum();
        m.get(h, d) + shift
    })
}

/// Decode every sentence against augmented scores; returns the trees and
/// `max_Y L(Y, λ)`.
pub fn relaxed_decode(
    corpus: &Corpus,
    constraints: &[Constraint],
    lambda: &[f64],
    options: DecodeOptions,
) -> (Vec<ParseTree>, f64) {
    let decoded: Vec<(ParseTree, f64)> = corpus
        .sentences()
        .par_iter()
        .zip(corpus.scores().par_iter())
        .map(|(s, m)| {
            let augmented = augment_scores(m, s, constraints, lambda);
            let tree = decode(&augmented, options);
            let value = augmented.tree_score(&tree);
            (tree, value)
        })
        .collect();
    let dual = decoded.iter().map(|(_, v)| v).sum();
    (decoded.into_iter().map(|(t, _)| t).collect(), dual)
}

fn measure(constraints: &[Constraint], corpus: &Corpus, trees: &[ParseTree]) -> Vec<Option<f64>> {
    constraints
        .iter()
        .map(|c| {
            let (p, m) = constraints::arc_counts(c, corpus, trees).expect("aligned by construction");
            constraints::ratio_from_counts(p, m)
        })
        .collect()
}

pub fn lr_infer(
    corpus: &Corpus,
    constraints: &[Constraint],
    params: &LrParams,
    options: DecodeOptions,
) -> Result<LrOutcome> {
    params.validate()?;
    if corpus.is_empty() {
        return Err(Error::Param("empty corpus".into()));
    }

    let mut alpha = params.alpha0;
    let mut lambda = vec![0.0; constraints.len()];
    let mut state = DualState::default();
    // (max violation, objective, trace index, trees)
    let mut best: Option<(f64, f64, usize, Vec<ParseTree>)> = None;

    for iter in 1..=params.max_iter {
        let (trees, dual_value) = relaxed_decode(corpus, constraints, &lambda, options);
        let measured = measure(constraints, corpus, &trees);
        let objective = corpus.objective(&trees);
        state.trace.push(LrIteration {
            iter,
            lambda: lambda.clone(),
            alpha,
            measured: measured.clone(),
            objective,
            dual_value,
        });

        let worst = constraints
            .iter()
            .zip(&measured)
            .map(|(c, &m)| constraints::violation(c, m))
            .fold(0.0, f64::max);
        if worst == 0.0 {
            state.lambda = lambda;
            return Ok(LrOutcome {
                trees,
                selected: state.trace.len() - 1,
                state,
                converged: true,
            });
        }
        let better = best.as_ref().is_none_or(|(v, o, _, _)| {
            worst < *v || (worst == *v && objective > *o)
        });
        if better {
            best = Some((worst, objective, state.trace.len() - 1, trees));
        }

        for ((l, c), m) in lambda.iter_mut().zip(constraints).zip(&measured) {
            let Some(m) = m else { continue };
            *l = match params.update {
                UpdateRule::Accumulate => *l + alpha * (c.r() - m),
                UpdateRule::Overwrite => alpha * (m - c.r()),
            };
        }
        alpha *= params.eta;
    }

    let (_, _, selected, trees) = best.expect("max_iter >= 1");
    state.lambda = lambda;
    Ok(LrOutcome {
        trees,
        state,
        converged: false,
        selected,
    })
}
