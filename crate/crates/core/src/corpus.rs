//! Sentences, score matrices, parse trees and the corpus container.
//!
//! Token positions are 1-based throughout; position 0 is the artificial
//! root. Score and probability grids are indexed `(head, dependent)` with
//! `head ∈ [0, n]` and `dependent ∈ [1, n]`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub upos: String,
}

impl Token {
    pub fn new(form: impl Into<String>, upos: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            upos: upos.into(),
        }
    }
}

/// A POS-tagged sentence with optional gold heads.
///
/// Dependency labels are carried along for output only; no inference step
/// reads or alters them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    id: String,
    tokens: Vec<Token>,
    heads: Option<Vec<usize>>,
    deprels: Vec<String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Dimension("sentence must have at least one token".into()));
        }
        let deprels = vec!["_".to_string(); tokens.len()];
        Ok(Sentence {
            id: id.into(),
            tokens,
            heads: None,
            deprels,
        })
    }

    /// Convenience constructor from `(form, upos)` pairs.
    pub fn from_pairs(id: impl Into<String>, pairs: &[(&str, &str)]) -> Result<Self> {
        Self::new(
            id,
            pairs.iter().map(|&(f, p)| Token::new(f, p)).collect(),
        )
    }

    /// Attach gold heads (`heads[j-1]` is the head of token `j`).
    pub fn with_gold_heads(mut self, heads: Vec<usize>) -> Result<Self> {
        if heads.len() != self.tokens.len() {
            return Err(Error::Dimension(format!(
                "expected {} gold heads, got {}",
                self.tokens.len(),
                heads.len()
            )));
        }
        if let Some(&h) = heads.iter().find(|&&h| h > heads.len()) {
            return Err(Error::IndexOutOfRange(format!(
                "gold head {} exceeds sentence length {}",
                h,
                heads.len()
            )));
        }
        if !is_tree(&heads) {
            return Err(Error::Dimension("gold heads not a tree".into()));
        }
        self.heads = Some(heads);
        Ok(self)
    }

    pub fn with_deprels(mut self, deprels: Vec<String>) -> Result<Self> {
        if deprels.len() != self.tokens.len() {
            return Err(Error::Dimension(format!(
                "expected {} labels, got {}",
                self.tokens.len(),
                deprels.len()
            )));
        }
        self.deprels = deprels;
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// POS tag at 1-based `position`; `None` for the root or out of range.
    pub fn upos(&self, position: usize) -> Option<&str> {
        if position == 0 {
            return None;
        }
        self.tokens.get(position - 1).map(|t| t.upos.as_str())
    }

    pub fn gold_heads(&self) -> Option<&[usize]> {
        self.heads.as_deref()
    }

    pub fn gold_tree(&self) -> Option<ParseTree> {
        self.heads.as_ref().map(|h| ParseTree { heads: h.clone() })
    }

    pub fn deprels(&self) -> &[String] {
        &self.deprels
    }
}

/// Returns true when `heads` (1-based heads, 0 = root) encodes a directed
/// spanning tree rooted at 0.
pub fn is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads
        .iter()
        .enumerate()
        .any(|(j, &h)| h > n || h == j + 1)
    {
        return false;
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    let mut path = Vec::new();
    for start in 1..=n {
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = heads[node - 1];
        }
        if state[node] == 1 {
            return false;
        }
        for v in path.drain(..) {
            state[v] = 2;
        }
    }
    true
}

/// Head assignment for one sentence; `heads()[j-1]` is the head of token `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParseTree {
    heads: Vec<usize>,
}

impl ParseTree {
    pub fn new(heads: Vec<usize>) -> Result<Self> {
        if heads.is_empty() {
            return Err(Error::Dimension("empty parse tree".into()));
        }
        if !is_tree(&heads) {
            return Err(Error::Dimension(format!("heads {heads:?} do not form a tree")));
        }
        Ok(ParseTree { heads })
    }

    pub(crate) fn new_unchecked(heads: Vec<usize>) -> Self {
        debug_assert!(is_tree(&heads), "not a tree: {heads:?}");
        ParseTree { heads }
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Head of the 1-based token `dep`.
    pub fn head(&self, dep: usize) -> usize {
        self.heads[dep - 1]
    }

    /// `(head, dependent)` pairs in dependent order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heads.iter().enumerate().map(|(j, &h)| (h, j + 1))
    }

    pub fn root_children(&self) -> usize {
        self.heads.iter().filter(|&&h| h == 0).count()
    }

    /// True when no two arcs cross (`i < k < j < l` over arc spans).
    pub fn is_projective(&self) -> bool {
        let spans: Vec<(usize, usize)> = self
            .arcs()
            .map(|(h, d)| (h.min(d), h.max(d)))
            .collect();
        for (a, &(i, j)) in spans.iter().enumerate() {
            for &(k, l) in &spans[a + 1..] {
                if (i < k && k < j && j < l) || (k < i && i < l && l < j) {
                    return false;
                }
            }
        }
        true
    }
}

/// Dense `(n+1) × n` grid indexed by `(head, dependent)`.
#[derive(Clone, Debug, PartialEq)]
struct ArcGrid {
    n: usize,
    values: Vec<f64>,
}

impl ArcGrid {
    fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity((n + 1) * n);
        for head in 0..=n {
            for dep in 1..=n {
                values.push(f(head, dep));
            }
        }
        ArcGrid { n, values }
    }

    #[inline]
    fn get(&self, head: usize, dep: usize) -> f64 {
        debug_assert!(head <= self.n && dep >= 1 && dep <= self.n);
        self.values[head * self.n + dep - 1]
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(|r| r.to_vec()).collect()
    }
}

/// Per-sentence arc log-potentials. Self-arcs hold `-inf`; every other
/// entry is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    grid: ArcGrid,
}

impl ScoreMatrix {
    /// Build from `n + 1` rows of `n` entries. Self-arc positions are
    /// overwritten with `-inf`; other entries must be finite.
    pub fn from_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        check_shape(n, rows)?;
        for (head, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if head != c + 1 && !v.is_finite() {
                    return Err(Error::Dimension(format!(
                        "non-finite score at head {head}, dependent {}",
                        c + 1
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |h, d| rows[h][d - 1]))
    }

    /// Build from a function of `(head, dependent)`; self-arcs are forced to
    /// `-inf` and the function is not called for them.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "score matrix needs at least one token");
        ScoreMatrix {
            grid: ArcGrid::from_fn(n, |h, d| if h == d { f64::NEG_INFINITY } else { f(h, d) }),
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    #[inline]
    pub fn get(&self, head: usize, dep: usize) -> f64 {
        self.grid.get(head, dep)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.grid.rows()
    }

    /// Sum of the scores of the tree's arcs.
    pub fn tree_score(&self, tree: &ParseTree) -> f64 {
        tree.arcs().map(|(h, d)| self.get(h, d)).sum()
    }
}

fn check_shape(n: usize, rows: &[Vec<f64>]) -> Result<()> {
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    if rows.len() != n + 1 {
        return Err(Error::Dimension(format!(
            "expected {} rows, got {}",
            n + 1,
            rows.len()
        )));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Dimension(format!(
            "row {i}: expected {n} columns, got {}",
            row.len()
        )));
    }
    Ok(())
}

/// Per-dependent head distribution `P(head | dependent)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcDistribution {
    grid: ArcGrid,
}

impl ArcDistribution {
    /// Build from `n + 1` rows of `n` probabilities. Self entries are set to
    /// zero; every column must sum to one within `1e-9`.
    pub fn from_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        check_shape(n, rows)?;
        let dist = ArcDistribution {
            grid: ArcGrid::from_fn(n, |h, d| if h == d { 0.0 } else { rows[h][d - 1] }),
        };
        for dep in 1..=n {
            let column: Vec<f64> = (0..=n).map(|h| dist.get(h, dep)).collect();
            if column.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Dimension(format!(
                    "dependent {dep}: probabilities outside [0, 1]"
                )));
            }
            let total: f64 = column.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Dimension(format!(
                    "dependent {dep}: probabilities sum to {total}"
                )));
            }
        }
        Ok(dist)
    }

    pub(crate) fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        ArcDistribution {
            grid: ArcGrid::from_fn(n, f),
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    #[inline]
    pub fn get(&self, head: usize, dep: usize) -> f64 {
        self.grid.get(head, dep)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.grid.rows()
    }
}

/// Per-dependent softmax over heads, stabilized by the column maximum.
pub fn to_distribution(m: &ScoreMatrix) -> ArcDistribution {
    let n = m.n();
    let mut values = vec![0.0; (n + 1) * n];
    for dep in 1..=n {
        let lse = log_sum_exp((0..=n).map(|h| m.get(h, dep)));
        for head in 0..=n {
            if head != dep {
                values[head * n + dep - 1] = (m.get(head, dep) - lse).exp();
            }
        }
    }
    ArcDistribution {
        grid: ArcGrid { n, values },
    }
}

/// `log Σ exp(x)` ignoring `-inf` terms; `-inf` for an empty or all-`-inf`
/// input.
pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Sentences paired with their score matrices.
#[derive(Clone, Debug)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    scores: Vec<ScoreMatrix>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>, scores: Vec<ScoreMatrix>) -> Result<Self> {
        if sentences.len() != scores.len() {
            return Err(Error::Misaligned(format!(
                "{} sentences but {} score matrices",
                sentences.len(),
                scores.len()
            )));
        }
        for (k, (s, m)) in sentences.iter().zip(&scores).enumerate() {
            if s.len() != m.n() {
                return Err(Error::Dimension(format!(
                    "entry {k} ({}): sentence has {} tokens, score matrix n = {}",
                    s.id(),
                    s.len(),
                    m.n()
                )));
            }
        }
        Ok(Corpus { sentences, scores })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn scores(&self) -> &[ScoreMatrix] {
        &self.scores
    }

    pub fn sentence(&self, k: usize) -> &Sentence {
        &self.sentences[k]
    }

    pub fn score_matrix(&self, k: usize) -> &ScoreMatrix {
        &self.scores[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sentence, &ScoreMatrix)> {
        self.sentences.iter().zip(&self.scores)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Total score of a tree assignment.
    pub fn objective(&self, trees: &[ParseTree]) -> f64 {
        self.scores
            .iter()
            .zip(trees)
            .map(|(m, t)| m.tree_score(t))
            .sum()
    }

    pub(crate) fn check_aligned(&self, trees: usize) -> Result<()> {
        if trees != self.len() {
            return Err(Error::Misaligned(format!(
                "{} trees for a corpus of {} sentences",
                trees,
                self.len()
            )));
        }
        Ok(())
    }

    /// Gold trees for every sentence, when all sentences carry them.
    pub fn gold_trees(&self) -> Option<Vec<ParseTree>> {
        self.sentences.iter().map(Sentence::gold_tree).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_detection() {
        assert!(is_tree(&[0]));
        assert!(is_tree(&[2, 0]));
        assert!(is_tree(&[0, 0, 2]));
        assert!(!is_tree(&[2, 1]));
        assert!(!is_tree(&[1]));
        assert!(!is_tree(&[0, 3, 2]));
        assert!(!is_tree(&[0, 5]));
    }

    #[test]
    fn single_candidate_head_gets_all_mass() {
        let m = ScoreMatrix::from_rows(1, &[vec![3.0], vec![0.0]]).unwrap();
        let p = to_distribution(&m);
        assert_eq!(p.get(0, 1), 1.0);
        assert_eq!(p.get(1, 1), 0.0);
    }

    #[test]
    fn hand_softmax() {
        // dependent 1 has candidate heads 0 and 2
        let m = ScoreMatrix::from_rows(2, &[vec![0.0, 0.0], vec![0.0, 0.0], vec![3f64.ln(), 0.0]])
            .unwrap();
        let p = to_distribution(&m);
        assert!((p.get(0, 1) - 0.25).abs() < 1e-12);
        assert!((p.get(2, 1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn equal_scores_are_uniform() {
        let m = ScoreMatrix::from_fn(4, |_, _| 1.5);
        let p = to_distribution(&m);
        for dep in 1..=4 {
            for head in 0..=4 {
                let expected = if head == dep { 0.0 } else { 0.25 };
                assert!((p.get(head, dep) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projectivity_check() {
        assert!(ParseTree::new(vec![0, 1, 2]).unwrap().is_projective());
        // arcs 1->3 and 2->4 cross
        assert!(!ParseTree::new(vec![0, 1, 1, 2]).unwrap().is_projective());
    }

    #[test]
    fn corpus_rejects_dimension_mismatch() {
        let s = Sentence::from_pairs("a", &[("dog", "NOUN")]).unwrap();
        let m = ScoreMatrix::from_fn(2, |_, _| 0.0);
        assert!(matches!(Corpus::new(vec![s], vec![m]), Err(Error::Dimension(_))));
    }
}
