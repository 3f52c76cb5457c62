//! Synthetic corpora with planted gold trees and word-order ratios.
//!
//! Gold trees are random projective trees with a single root child. Tags
//! are assigned after the tree, so a planted unary ratio is realized by
//! tagging a token with probability depending on which side its head is
//! on. Scores reward gold arcs by a fixed margin, add Gaussian noise and
//! can be biased toward one side for a chosen tag to mimic a parser
//! carrying word-order preferences from a different language.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::estimate::estimate_ratio;
use crate::constraints::Constraint;
use crate::corpus::{Corpus, ScoreMatrix, Sentence, Token};
use crate::error::{Error, Result};

/// Margin used for constraints built from planted ratios.
pub const ORACLE_THETA: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Planted {
    /// Tokens tagged `pos` have their head on the left with probability
    /// `ratio`. `rate` is the overall share of non-root tokens tagged.
    Unary {
        id: String,
        pos: String,
        ratio: f64,
        rate: f64,
    },
    /// Dependents of `pos1` tokens are tagged `pos2` and follow their head
    /// with probability `ratio`.
    Binary {
        id: String,
        pos1: String,
        pos2: String,
        ratio: f64,
        rate: f64,
    },
}

impl Planted {
    fn ratio_and_rate(&self) -> (f64, f64) {
        match self {
            Planted::Unary { ratio, rate, .. } | Planted::Binary { ratio, rate, .. } => (*ratio, *rate),
        }
    }

    fn tags(&self) -> Vec<&str> {
        match self {
            Planted::Unary { pos, .. } => vec![pos],
            Planted::Binary { pos1, pos2, .. } => vec![pos1, pos2],
        }
    }

    /// Constraint template with the planted ratio as target.
    pub fn constraint(&self, theta: f64) -> Result<Constraint> {
        match self {
            Planted::Unary { id, pos, ratio, .. } => Constraint::unary(id.clone(), pos.clone(), *ratio, theta),
            Planted::Binary {
                id,
                pos1,
                pos2,
                ratio,
                ..
            } => Constraint::binary(id.clone(), pos1.clone(), pos2.clone(), *ratio, theta),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Extra score on every non-root candidate head on `side` of a token
/// tagged `pos`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub pos: String,
    pub side: Side,
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Tags for tokens not claimed by a planted template, with weights.
    pub pos_inventory: Vec<(String, f64)>,
    #[serde(default)]
    pub planted: Vec<Planted>,
    /// Score bonus of gold arcs.
    pub margin: f64,
    /// Standard deviation of the score noise.
    pub sigma: f64,
    #[serde(default)]
    pub corruption: Option<Corruption>,
    /// Reattach one token per sentence to a random non-descendant, which
    /// usually introduces crossing arcs.
    #[serde(default)]
    pub non_projective: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            sentences: 100,
            min_len: 4,
            max_len: 12,
            pos_inventory: vec![
                ("VERB".into(), 0.3),
                ("DET".into(), 0.2),
                ("ADJ".into(), 0.2),
                ("ADV".into(), 0.1),
                ("PRON".into(), 0.2),
            ],
            planted: Vec::new(),
            margin: 2.0,
            sigma: 1.0,
            corruption: None,
            non_projective: false,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sentences == 0 {
            return Err(Error::Param("at least one sentence required".into()));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Param(format!(
                "invalid length range [{}, {}]",
                self.min_len, self.max_len
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Param(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !self.margin.is_finite() {
            return Err(Error::Param("margin must be finite".into()));
        }
        if let Some(c) = &self.corruption {
            if !c.bias.is_finite() {
                return Err(Error::Param("corruption bias must be finite".into()));
            }
        }
        if self.pos_inventory.is_empty()
            || self.pos_inventory.iter().any(|(_, w)| !(*w >= 0.0 && w.is_finite()))
            || self.pos_inventory.iter().all(|(_, w)| *w == 0.0)
        {
            return Err(Error::Param("POS inventory needs non-negative weights, not all zero".into()));
        }
        for p in &self.planted {
            let (ratio, rate) = p.ratio_and_rate();
            if !(0.0..=1.0).contains(&ratio) {
                return Err(Error::Param(format!("planted ratio {ratio} outside [0, 1]")));
            }
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::Param(format!("planted rate {rate} outside (0, 1]")));
            }
            // Tagging probabilities on the two sides are 2·rate·ratio and
            // 2·rate·(1 - ratio); both must be valid probabilities.
            if 2.0 * rate * ratio.max(1.0 - ratio) > 1.0 + 1e-12 {
                return Err(Error::Param(format!(
                    "planted ratio {ratio} unreachable at rate {rate}"
                )));
            }
            for tag in p.tags() {
                if self.pos_inventory.iter().any(|(t, w)| t == tag && *w > 0.0) {
                    return Err(Error::Param(format!(
                        "planted tag {tag} also drawn from the background inventory"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    /// Sentences carry the planted gold heads.
    pub corpus: Corpus,
    /// Realized gold ratio of each planted template.
    pub true_ratios: Vec<Option<f64>>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights = WeightedIndex::new(spec.pos_inventory.iter().map(|(_, w)| *w))
        .map_err(|e| Error::Param(format!("POS inventory: {e}")))?;

    let mut sentences = Vec::with_capacity(spec.sentences);
    let mut scores = Vec::with_capacity(spec.sentences);
    for k in 0..spec.sentences {
        let n = rng.random_range(spec.min_len..=spec.max_len);
        let mut heads = vec![0; n];
        attach(&mut rng, &mut heads, 1, n, 0);
        if spec.non_projective && n >= 3 {
            reattach(&mut rng, &mut heads);
        }

        let tags = assign_tags(&mut rng, spec, &weights, &heads);
        let tokens: Vec<Token> = tags
            .iter()
            .enumerate()
            .map(|(j, t)| Token::new(format!("w{}", j + 1), t.clone()))
            .collect();
        let sentence = Sentence::new(format!("synth-{k}"), tokens)?.with_gold_heads(heads.clone())?;

        let m = ScoreMatrix::from_fn(n, |h, d| {
            let mut s = if heads[d - 1] == h { spec.margin } else { 0.0 };
            if spec.sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                s += spec.sigma * z;
            }
            if let Some(c) = &spec.corruption {
                let on_side = match c.side {
                    Side::Left => h != 0 && h < d,
                    Side::Right => h > d,
                };
                if on_side && tags[d - 1] == c.pos {
                    s += c.bias;
                }
            }
            s
        });
        sentences.push(sentence);
        scores.push(m);
    }

    let mut true_ratios = Vec::with_capacity(spec.planted.len());
    for p in &spec.planted {
        let c = p.constraint(0.0)?;
        true_ratios.push(estimate_ratio(&sentences, &c, None, 0)?.ratio);
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::new(sentences, scores)?,
        true_ratios,
    })
}

/// Attach the span `lo..=hi` under `head`: a random token becomes the
/// span's root and the tokens on each side split into contiguous blocks,
/// each a subtree of that root.
fn attach(rng: &mut ChaCha8Rng, heads: &mut [usize], lo: usize, hi: usize, head: usize) {
    if lo > hi {
        return;
    }
    let root = rng.random_range(lo..=hi);
    heads[root - 1] = head;
    split(rng, heads, lo, root - 1, root);
    split(rng, heads, root + 1, hi, root);
}

fn split(rng: &mut ChaCha8Rng, heads: &mut [usize], lo: usize, hi: usize, head: usize) {
    let mut start = lo;
    while start <= hi {
        let end = rng.random_range(start..=hi);
        attach(rng, heads, start, end, head);
        start = end + 1;
    }
}

fn reattach(rng: &mut ChaCha8Rng, heads: &mut [usize]) {
    let n = heads.len();
    let dep = rng.random_range(1..=n);
    if heads[dep - 1] == 0 {
        return;
    }
    let candidates: Vec<usize> = (1..=n)
        .filter(|&h| h != dep && h != heads[dep - 1] && !descends_from(heads, h, dep))
        .collect();
    if candidates.is_empty() {
        return;
    }
    heads[dep - 1] = candidates[rng.random_range(0..candidates.len())];
}

fn descends_from(heads: &[usize], mut node: usize, ancestor: usize) -> bool {
    while node != 0 {
        if node == ancestor {
            return true;
        }
        node = heads[node - 1];
    }
    false
}

fn assign_tags(
    rng: &mut ChaCha8Rng,
    spec: &SyntheticSpec,
    weights: &WeightedIndex<f64>,
    heads: &[usize],
) -> Vec<String> {
    let n = heads.len();
    let mut tags: Vec<Option<String>> = vec![None; n];
    for p in &spec.planted {
        let (ratio, rate) = p.ratio_and_rate();
        let left = 2.0 * rate * ratio;
        let right = 2.0 * rate * (1.0 - ratio);
        match p {
            Planted::Unary { pos, .. } => {
                for d in 1..=n {
                    let h = heads[d - 1];
                    if h == 0 || tags[d - 1].is_some() {
                        continue;
                    }
                    let prob = if h < d { left } else { right };
                    if rng.random_bool(prob.min(1.0)) {
                        tags[d - 1] = Some(pos.clone());
                    }
                }
            }
            Planted::Binary { pos1, pos2, .. } => {
                for d in 1..=n {
                    let h = heads[d - 1];
                    if h == 0 || tags[d - 1].is_some() || tags[h - 1].as_deref() != Some(pos1) {
                        continue;
                    }
                    let prob = if h < d { left } else { right };
                    if rng.random_bool(prob.min(1.0)) {
                        tags[d - 1] = Some(pos2.clone());
                    }
                }
            }
        }
    }
    tags.into_iter()
        .map(|t| t.unwrap_or_else(|| spec.pos_inventory[weights.sample(rng)].0.clone()))
        .collect()
}
