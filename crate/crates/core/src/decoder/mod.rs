//! Unconstrained per-sentence decoding plus exhaustive oracles.

mod brute;
mod eisner;
mod mst;

pub use brute::{
    brute_force_constrained, brute_force_decode, for_each_tree, ConstrainedOptimum,
    BRUTE_FORCE_MAX_TOKENS, CONSTRAINED_SEARCH_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::corpus::{ParseTree, ScoreMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeOptions {
    /// Restrict to trees without crossing arcs.
    pub projective: bool,
    /// Require exactly one child of the root.
    pub single_root: bool,
}

impl DecodeOptions {
    pub fn projective(projective: bool) -> Self {
        DecodeOptions {
            projective,
            single_root: false,
        }
    }
}

/// Maximum spanning tree (non-projective).
pub fn mst_decode(m: &ScoreMatrix) -> ParseTree {
    decode(m, DecodeOptions::default())
}

/// Best tree without crossing arcs.
pub fn projective_decode(m: &ScoreMatrix) -> ParseTree {
    decode(m, DecodeOptions::projective(true))
}

pub fn decode(m: &ScoreMatrix, options: DecodeOptions) -> ParseTree {
    let weights = square_weights(m);
    let solve = |w: &[Vec<f64>]| {
        if options.projective {
            eisner::eisner(w)
        } else {
            mst::chu_liu_edmonds(w)
        }
    };
    let parents = solve(&weights);
    let tree = ParseTree::new_unchecked(parents[1..].to_vec());
    if !options.single_root || tree.root_children() == 1 {
        return tree;
    }

    // Try every root child and keep the best; the lower child wins ties.
    let n = m.n();
    let mut best: Option<(f64, ParseTree)> = None;
    for child in 1..=n {
        let mut restricted = weights.clone();
        for (d, w) in restricted[0].iter_mut().enumerate().skip(1) {
            if d != child {
                *w = f64::NEG_INFINITY;
            }
        }
        let parents = solve(&restricted);
        let candidate = ParseTree::new_unchecked(parents[1..].to_vec());
        let score = m.tree_score(&candidate);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, candidate));
        }
    }
    best.map(|(_, t)| t).expect("at least one token")
}

/// `(n+1) × (n+1)` copy with an unreachable column for the root.
fn square_weights(m: &ScoreMatrix) -> Vec<Vec<f64>> {
    let n = m.n();
    (0..=n)
        .map(|h| {
            (0..=n)
                .map(|d| {
                    if d == 0 || d == h {
                        f64::NEG_INFINITY
                    } else {
                        m.get(h, d)
                    }
                })
                .collect()
        })
        .collect()
}
