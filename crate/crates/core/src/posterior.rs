//! Constrained decoding by posterior regularization.
//!
//! The arc distribution `p` of every sentence is projected (in KL) onto
//! the set of distributions whose expected constraint features are
//! non-positive. The projection has the form `q ∝ p · exp(-λ·φ)` where
//! `λ ≥ 0` maximizes `-log Z(λ)`. Arcs are treated as independent given the
//! sentence, so `Z` factorizes into one head-sum per dependent:
//!
//! ```text
//! log Z(λ) = Σ_k Σ_dep log Σ_head p(head | dep) · exp(-λ·φ(k, head, dep))
//! ```
//!
//! Each constraint contributes two features, one per side of its band (see
//! [`constraints::phi_for_class`]), so margins are folded into the features
//! and the right-hand side of the expectation constraint is zero.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{self, ArcClass, Constraint, Direction};
use crate::corpus::{log_sum_exp, to_distribution, ArcDistribution, Corpus, ParseTree, ScoreMatrix};
use crate::decoder::{decode, DecodeOptions};
use crate::error::{Error, Result};

/// Finite stand-in for `ln 0` when decoding on log posteriors.
const LOG_ZERO: f64 = -1e4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    PlainSgd,
    #[default]
    AdaptiveMoments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrParams {
    pub lr0: f64,
    pub decay: f64,
    pub max_iter: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for PrParams {
    fn default() -> Self {
        PrParams {
            lr0: 1.0,
            decay: 0.98,
            max_iter: 100,
            batch_size: 128,
            optimizer: Optimizer::AdaptiveMoments,
            grad_tol: 1e-4,
            seed: 0,
        }
    }
}

impl PrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) {
            return Err(Error::Param(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Param(format!("decay must be in (0, 1], got {}", self.decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::Param("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
struct ArcFeature {
    head: usize,
    dep: usize,
    feature: usize,
    value: f64,
}

/// Sparse per-arc feature values. Feature `2i` is the upper side of
/// constraint `i`, feature `2i + 1` its lower side.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureIndex {
    dimension: usize,
    arcs: Vec<Vec<ArcFeature>>,
}

impl FeatureIndex {
    pub fn build(corpus: &Corpus, constraints: &[Constraint]) -> Self {
        let arcs = corpus
            .sentences()
            .iter()
            .map(|s| {
                let n = s.len();
                let mut out = Vec::new();
                for dep in 1..=n {
                    for head in (0..=n).filter(|&h| h != dep) {
                        for (i, c) in constraints.iter().enumerate() {
                            let class = c.class_of(s, head, dep);
                            if class == ArcClass::Neither {
                                continue;
                            }
                            for (offset, dir) in [Direction::Upper, Direction::Lower].into_iter().enumerate() {
                                out.push(ArcFeature {
                                    head,
                                    dep,
                                    feature: 2 * i + offset,
                                    value: constraints::phi_for_class(c, dir, class),
                                });
                            }
                        }
                    }
                }
                out
            })
            .collect();
        FeatureIndex {
            dimension: 2 * constraints.len(),
            arcs,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn sentences(&self) -> usize {
        self.arcs.len()
    }

    /// `φ_feature(k, head, dep)`.
    pub fn value(&self, k: usize, head: usize, dep: usize, feature: usize) -> f64 {
        self.arcs[k]
            .iter()
            .filter(|a| a.head == head && a.dep == dep && a.feature == feature)
            .map(|a| a.value)
            .sum()
    }

    /// `λ·φ(k, head, dep)` for every arc of sentence `k`, laid out as
    /// `head * n + dep - 1`.
    fn energies(&self, k: usize, n: usize, lambda: &[f64]) -> Vec<f64> {
        let mut e = vec![0.0; (n + 1) * n];
        for a in &self.arcs[k] {
            e[a.head * n + a.dep - 1] += lambda[a.feature] * a.value;
        }
        e
    }
}

fn check_inputs(corpus: &Corpus, dists: &[ArcDistribution], fi: &FeatureIndex, lambda: &[f64]) -> Result<()> {
    if dists.len() != corpus.len() || fi.sentences() != corpus.len() {
        return Err(Error::Misaligned(format!(
            "corpus of {} sentences, {} distributions, features for {}",
            corpus.len(),
            dists.len(),
            fi.sentences()
        )));
    }
    if lambda.len() != fi.dimension() {
        return Err(Error::Misaligned(format!(
            "lambda has {} components, features have {}",
            lambda.len(),
            fi.dimension()
        )));
    }
    Ok(())
}

/// Reweighted log-probabilities `ln p - λ·φ` of one sentence, unnormalized.
fn log_weights(dist: &ArcDistribution, energies: &[f64]) -> Vec<f64> {
    let n = dist.n();
    let mut w = vec![f64::NEG_INFINITY; (n + 1) * n];
    for head in 0..=n {
        for dep in 1..=n {
            if head != dep {
                w[head * n + dep - 1] = dist.get(head, dep).ln() - energies[head * n + dep - 1];
            }
        }
    }
    w
}

/// Per-dependent log normalizers of a sentence's reweighted distribution.
fn column_log_norms(n: usize, logw: &[f64]) -> Vec<f64> {
    (1..=n)
        .map(|dep| log_sum_exp((0..=n).map(|h| logw[h * n + dep - 1])))
        .collect()
}

/// Contribution of sentence `k` to `log Z` and to its gradient.
fn sentence_terms(
    k: usize,
    dist: &ArcDistribution,
    fi: &FeatureIndex,
    lambda: &[f64],
    grad: &mut [f64],
) -> f64 {
    let n = dist.n();
    let logw = log_weights(dist, &fi.energies(k, n, lambda));
    let norms = column_log_norms(n, &logw);
    for a in &fi.arcs[k] {
        let q = (logw[a.head * n + a.dep - 1] - norms[a.dep - 1]).exp();
        grad[a.feature] -= a.value * q;
    }
    norms.iter().sum()
}

fn partition_terms(
    ks: &[usize],
    dists: &[ArcDistribution],
    fi: &FeatureIndex,
    lambda: &[f64],
) -> (f64, Vec<f64>) {
    let d = fi.dimension();
    ks.par_iter()
        .map(|&k| {
            let mut g = vec![0.0; d];
            let v = sentence_terms(k, &dists[k], fi, lambda, &mut g);
            (v, g)
        })
        .reduce(
            || (0.0, vec![0.0; d]),
            |(v1, mut g1), (v2, g2)| {
                for (a, b) in g1.iter_mut().zip(g2) {
                    *a += b;
                }
                (v1 + v2, g1)
            },
        )
}

pub fn log_partition(
    corpus: &Corpus,
    dists: &[ArcDistribution],
    fi: &FeatureIndex,
    lambda: &[f64],
) -> Result<f64> {
    check_inputs(corpus, dists, fi, lambda)?;
    let all: Vec<usize> = (0..corpus.len()).collect();
    Ok(partition_terms(&all, dists, fi, lambda).0)
}

/// `∂ log Z / ∂λ`: per dependent, the expectation of `-φ` under the
/// reweighted head distribution.
pub fn grad_log_partition(
    corpus: &Corpus,
    dists: &[ArcDistribution],
    fi: &FeatureIndex,
    lambda: &[f64],
) -> Result<Vec<f64>> {
    check_inputs(corpus, dists, fi, lambda)?;
    let all: Vec<usize> = (0..corpus.len()).collect();
    Ok(partition_terms(&all, dists, fi, lambda).1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrIteration {
    pub iter: usize,
    /// Norm of the projected full-corpus gradient at the start of the step.
    pub grad_norm: f64,
    pub neg_log_z: f64,
    pub lambda: Vec<f64>,
}

/// Norm of the ascent direction restricted to components that can move
/// without leaving `λ ≥ 0`.
fn projected_norm(lambda: &[f64], ascent: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(ascent)
        .map(|(&l, &g)| if l > 0.0 { g } else { g.max(0.0) })
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// Projected stochastic ascent on `-log Z(λ)` over `λ ≥ 0`.
pub fn solve_dual(
    corpus: &Corpus,
    dists: &[ArcDistribution],
    fi: &FeatureIndex,
    params: &PrParams,
) -> Result<(Vec<f64>, Vec<PrIteration>)> {
    params.validate()?;
    let d = fi.dimension();
    let mut lambda = vec![0.0; d];
    check_inputs(corpus, dists, fi, &lambda)?;
    let mut trace = Vec::new();
    if d == 0 || corpus.is_empty() {
        return Ok((lambda, trace));
    }

    let size = corpus.len();
    let batch = params.batch_size.min(size);
    let scale = size as f64 / batch as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..size).collect();
    let mut cursor = size;

    let all: Vec<usize> = (0..size).collect();
    let mut rate = params.lr0;
    let mut first = vec![0.0; d];
    let mut second = vec![0.0; d];

    for iter in 1..=params.max_iter {
        let (log_z, grad) = partition_terms(&all, dists, fi, &lambda);
        let ascent: Vec<f64> = grad.iter().map(|g| -g).collect();
        let grad_norm = projected_norm(&lambda, &ascent);
        trace.push(PrIteration {
            iter,
            grad_norm,
            neg_log_z: -log_z,
            lambda: lambda.clone(),
        });
        if grad_norm < params.grad_tol {
            break;
        }

        let step_grad: Vec<f64> = if batch == size {
            ascent
        } else {
            if cursor + batch > size {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let ks = &order[cursor..cursor + batch];
            cursor += batch;
            let (_, g) = partition_terms(ks, dists, fi, &lambda);
            g.iter().map(|g| -g * scale).collect()
        };

        match params.optimizer {
            Optimizer::PlainSgd => {
                for (l, g) in lambda.iter_mut().zip(&step_grad) {
                    *l = (*l + rate * g).max(0.0);
                }
            }
            Optimizer::AdaptiveMoments => {
                let t = iter as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                for i in 0..d {
                    let g = step_grad[i];
                    first[i] = ADAM_BETA1 * first[i] + (1.0 - ADAM_BETA1) * g;
                    second[i] = ADAM_BETA2 * second[i] + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = first[i] / c1;
                    let v_hat = second[i] / c2;
                    lambda[i] = (lambda[i] + rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON)).max(0.0);
                }
            }
        }
        rate *= params.decay;
    }
    Ok((lambda, trace))
}

/// `q(head | dep) ∝ p(head | dep) · exp(-λ·φ(head, dep))` per sentence.
pub fn posterior_arc_probs(
    corpus: &Corpus,
    dists: &[ArcDistribution],
    fi: &FeatureIndex,
    lambda: &[f64],
) -> Result<Vec<ArcDistribution>> {
    check_inputs(corpus, dists, fi, lambda)?;
    Ok(dists
        .par_iter()
        .enumerate()
        .map(|(k, dist)| {
            let n = dist.n();
            let logw = log_weights(dist, &fi.energies(k, n, lambda));
            let norms = column_log_norms(n, &logw);
            ArcDistribution::from_fn(n, |h, d| {
                if h == d {
                    0.0
                } else {
                    (logw[h * n + d - 1] - norms[d - 1]).exp()
                }
            })
        })
        .collect())
}

/// Arc-factored `KL(q ‖ p)`, summed over dependents.
pub fn kl_divergence(q: &[ArcDistribution], p: &[ArcDistribution]) -> f64 {
    q.iter()
        .zip(p)
        .map(|(q, p)| {
            let n = q.n();
            let mut kl = 0.0;
            for dep in 1..=n {
                for head in (0..=n).filter(|&h| h != dep) {
                    let qv = q.get(head, dep);
                    if qv > 0.0 {
                        kl += qv * (qv.ln() - p.get(head, dep).ln());
                    }
                }
            }
            kl
        })
        .sum()
}

/// Log-probabilities as decoding scores, with zeros mapped to a finite
/// floor.
pub fn log_scores(dist: &ArcDistribution) -> ScoreMatrix {
    ScoreMatrix::from_fn(dist.n(), |h, d| {
        let p = dist.get(h, d);
        if p > 0.0 {
            p.ln().max(LOG_ZERO)
        } else {
            LOG_ZERO
        }
    })
}

#[derive(Clone, Debug)]
pub struct PrOutcome {
    pub trees: Vec<ParseTree>,
    pub lambda_star: Vec<f64>,
    pub trace: Vec<PrIteration>,
    pub posteriors: Vec<ArcDistribution>,
}

pub fn pr_infer(
    corpus: &Corpus,
    constraints: &[Constraint],
    params: &PrParams,
    options: DecodeOptions,
) -> Result<PrOutcome> {
    if corpus.is_empty() {
        return Err(Error::Param("empty corpus".into()));
    }
    let dists: Vec<ArcDistribution> = corpus.scores().par_iter().map(to_distribution).collect();
    let fi = FeatureIndex::build(corpus, constraints);
    let (lambda_star, trace) = solve_dual(corpus, &dists, &fi, params)?;
    let posteriors = posterior_arc_probs(corpus, &dists, &fi, &lambda_star)?;
    let trees = posteriors
        .par_iter()
        .map(|q| decode(&log_scores(q), options))
        .collect();
    Ok(PrOutcome {
        trees,
        lambda_star,
        trace,
        posteriors,
    })
}
