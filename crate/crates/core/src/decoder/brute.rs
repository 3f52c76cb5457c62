//! Exhaustive decoders used as test oracles.

use std::collections::HashMap;

use crate::constraints::{self, Constraint};
use crate::corpus::{Corpus, ParseTree, ScoreMatrix};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_MAX_TOKENS: usize = 8;

/// Upper bound on the number of joint tree assignments enumerated by
/// [`brute_force_constrained`].
pub const CONSTRAINED_SEARCH_LIMIT: u128 = 1_000_000;

/// Calls `visit` with the head vector of every dependency tree over `n`
/// tokens, in lexicographic order of heads.
pub fn for_each_tree(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut heads = vec![0; n];
    assign(&mut heads, 1, &mut visit);
}

fn assign(heads: &mut [usize], dep: usize, visit: &mut impl FnMut(&[usize])) {
    let n = heads.len();
    if dep > n {
        visit(heads);
        return;
    }
    for head in 0..=n {
        if head == dep || closes_cycle(heads, dep, head) {
            continue;
        }
        heads[dep - 1] = head;
        assign(heads, dep + 1, visit);
    }
}

/// Following heads from `head` through already-assigned tokens (`< dep`)
/// leads back to `dep`.
fn closes_cycle(heads: &[usize], dep: usize, head: usize) -> bool {
    let mut node = head;
    loop {
        if node == dep {
            return true;
        }
        if node == 0 || node > dep {
            return false;
        }
        node = heads[node - 1];
    }
}

/// Exact maximum over all trees, by enumeration.
pub fn brute_force_decode(m: &ScoreMatrix) -> Result<(ParseTree, f64)> {
    let n = m.n();
    if n > BRUTE_FORCE_MAX_TOKENS {
        return Err(Error::SearchSpace(format!(
            "{n} tokens exceeds the brute-force limit of {BRUTE_FORCE_MAX_TOKENS}"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_tree(n, |heads| {
        let score: f64 = heads.iter().enumerate().map(|(j, &h)| m.get(h, j + 1)).sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, heads.to_vec()));
        }
    });
    let (score, heads) = best.expect("n >= 1 has at least one tree");
    Ok((ParseTree::new_unchecked(heads), score))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedOptimum {
    pub trees: Vec<ParseTree>,
    pub objective: f64,
}

struct Candidate {
    score: f64,
    counts: Vec<(usize, usize)>,
    heads: Vec<usize>,
}

/// Exact corpus-level constrained decoding by enumerating joint tree
/// assignments. Returns `None` when no assignment satisfies every
/// constraint.
pub fn brute_force_constrained(
    corpus: &Corpus,
    constraints: &[Constraint],
    projective: bool,
) -> Result<Option<ConstrainedOptimum>> {
    let mut total: u128 = 1;
    let mut per_sentence: Vec<Vec<Candidate>> = Vec::with_capacity(corpus.len());

    for (s, m) in corpus.iter() {
        let n = m.n();
        if n > BRUTE_FORCE_MAX_TOKENS {
            return Err(Error::SearchSpace(format!(
                "sentence {} has {n} tokens, limit {BRUTE_FORCE_MAX_TOKENS}",
                s.id()
            )));
        }
        // Trees with identical constraint counts are interchangeable for
        // feasibility, so only the best of each group is kept.
        let mut groups: HashMap<Vec<(usize, usize)>, Candidate> = HashMap::new();
        let mut trees = 0u128;
        for_each_tree(n, |heads| {
            if projective && !ParseTree::new_unchecked(heads.to_vec()).is_projective() {
                return;
            }
            trees += 1;
            let score: f64 = heads.iter().enumerate().map(|(j, &h)| m.get(h, j + 1)).sum();
            let counts: Vec<(usize, usize)> = constraints
                .iter()
                .map(|c| constraints::heads_counts(c, s, heads))
                .collect();
            match groups.get_mut(&counts) {
                Some(best) if score <= best.score => {}
                Some(best) => {
                    best.score = score;
                    best.heads = heads.to_vec();
                }
                None => {
                    groups.insert(
                        counts.clone(),
                        Candidate {
                            score,
                            counts,
                            heads: heads.to_vec(),
                        },
                    );
                }
            }
        });
        total = total.saturating_mul(trees);
        if total > CONSTRAINED_SEARCH_LIMIT {
            return Err(Error::SearchSpace(format!(
                "joint assignments exceed {CONSTRAINED_SEARCH_LIMIT}"
            )));
        }
        let mut candidates: Vec<Candidate> = groups.into_values().collect();
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.heads.cmp(&b.heads)));
        per_sentence.push(candidates);
    }

    // best achievable score of sentences k.. for pruning
    let mut suffix_best = vec![0.0; per_sentence.len() + 1];
    for k in (0..per_sentence.len()).rev() {
        suffix_best[k] = suffix_best[k + 1] + per_sentence[k][0].score;
    }

    let mut search = Search {
        constraints,
        per_sentence: &per_sentence,
        suffix_best: &suffix_best,
        chosen: vec![0; per_sentence.len()],
        best: None,
    };
    let mut counts = vec![(0, 0); constraints.len()];
    search.run(0, 0.0, &mut counts);

    Ok(search.best.map(|(objective, choice)| ConstrainedOptimum {
        trees: choice
            .iter()
            .enumerate()
            .map(|(k, &i)| ParseTree::new_unchecked(per_sentence[k][i].heads.clone()))
            .collect(),
        objective,
    }))
}

struct Search<'a> {
    constraints: &'a [Constraint],
    per_sentence: &'a [Vec<Candidate>],
    suffix_best: &'a [f64],
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn run(&mut self, k: usize, score: f64, counts: &mut [(usize, usize)]) {
        if let Some((best, _)) = &self.best {
            if score + self.suffix_best[k] <= *best {
                return;
            }
        }
        if k == self.per_sentence.len() {
            let feasible = self.constraints.iter().zip(counts.iter()).all(|(c, &(p, m))| {
                constraints::is_satisfied(c, constraints::ratio_from_counts(p, m))
            });
            if feasible {
                self.best = Some((score, self.chosen.clone()));
            }
            return;
        }
        for (i, cand) in self.per_sentence[k].iter().enumerate() {
            for (acc, &(p, m)) in counts.iter_mut().zip(&cand.counts) {
                acc.0 += p;
                acc.1 += m;
            }
            self.chosen[k] = i;
            self.run(k + 1, score + cand.score, counts);
            for (acc, &(p, m)) in counts.iter_mut().zip(&cand.counts) {
                acc.0 -= p;
                acc.1 -= m;
            }
        }
    }
}
