//! Ratio estimation from gold-annotated treebanks.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{self, Constraint};
use crate::corpus::Sentence;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioEstimate {
    /// `None` when no arc falls in either class.
    pub ratio: Option<f64>,
    /// Plus plus Minus arcs counted.
    pub count: usize,
}

/// Ratio of `c` over the gold trees of `treebank`, or of a uniform
/// sample of `sample_size` sentences drawn without replacement.
pub fn estimate_ratio(
    treebank: &[Sentence],
    c: &Constraint,
    sample_size: Option<usize>,
    seed: u64,
) -> Result<RatioEstimate> {
    let picked: Vec<usize> = match sample_size {
        None => (0..treebank.len()).collect(),
        Some(k) if k > treebank.len() => {
            return Err(Error::Param(format!(
                "sample size {k} exceeds treebank size {}",
                treebank.len()
            )))
        }
        Some(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = index::sample(&mut rng, treebank.len(), k).into_vec();
            idx.sort_unstable();
            idx
        }
    };

    let (mut plus, mut minus) = (0, 0);
    for &k in &picked {
        let s = &treebank[k];
        let heads = s.gold_heads().ok_or_else(|| Error::MissingGold(s.id().to_string()))?;
        let (p, m) = constraints::heads_counts(c, s, heads);
        plus += p;
        minus += m;
    }
    Ok(RatioEstimate {
        ratio: constraints::ratio_from_counts(plus, minus),
        count: plus + minus,
    })
}
