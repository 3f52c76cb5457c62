//! Corpus-statistics constraints over word order.
//!
//! A constraint partitions candidate arcs into `Plus`, `Minus` and
//! `Neither`. Its ratio is the share of `Plus` arcs among `Plus ∪ Minus`
//! arcs of a tree assignment (or of arc marginals), and it is satisfied
//! when that ratio lies in `[r - theta, r + theta]`.
//!
//! * Unary `(POS)`: an arc into a `POS` dependent is `Plus` when the head
//!   is to its left and `Minus` when it is to its right.
//! * Binary `(POS1, POS2)`: an arc joining a `POS1` token and a `POS2`
//!   token, in either head/dependent role, is `Plus` when the `POS1` token
//!   comes first and `Minus` otherwise.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{ArcDistribution, Corpus, ParseTree, Sentence};
use crate::error::{Error, Result};

/// Slack applied to ratio-band comparisons so that exactly representable
/// boundary ratios are not rejected by rounding.
pub const RATIO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootPolicy {
    /// Root-headed arcs never count towards a ratio.
    #[default]
    Neither,
    /// The root sits at position 0, left of every token.
    CountsLeft,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Unary { pos: String },
    Binary { pos1: String, pos2: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArcClass {
    Plus,
    Minus,
    Neither,
}

/// Which side of the `[r - theta, r + theta]` band a feature encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// ratio ≤ r + theta
    Upper,
    /// ratio ≥ r - theta
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    id: String,
    kind: ConstraintKind,
    r: f64,
    theta: f64,
    root_policy: RootPolicy,
}

impl Constraint {
    pub fn new(id: impl Into<String>, kind: ConstraintKind, r: f64, theta: f64) -> Result<Self> {
        let id = id.into();
        if !(r.is_finite() && (0.0..=1.0).contains(&r)) {
            return Err(Error::Constraint(format!("{id}: ratio {r} outside [0, 1]")));
        }
        if !(theta.is_finite() && (0.0..=0.5).contains(&theta)) {
            return Err(Error::Constraint(format!("{id}: theta {theta} outside [0, 0.5]")));
        }
        if let ConstraintKind::Binary { pos1, pos2 } = &kind {
            if pos1 == pos2 {
                return Err(Error::Constraint(format!(
                    "{id}: binary constraint needs two distinct tags, got {pos1} twice"
                )));
            }
        }
        Ok(Constraint {
            id,
            kind,
            r,
            theta,
            root_policy: RootPolicy::default(),
        })
    }

    pub fn unary(id: impl Into<String>, pos: impl Into<String>, r: f64, theta: f64) -> Result<Self> {
        Self::new(id, ConstraintKind::Unary { pos: pos.into() }, r, theta)
    }

    pub fn binary(
        id: impl Into<String>,
        pos1: impl Into<String>,
        pos2: impl Into<String>,
        r: f64,
        theta: f64,
    ) -> Result<Self> {
        Self::new(
            id,
            ConstraintKind::Binary {
                pos1: pos1.into(),
                pos2: pos2.into(),
            },
            r,
            theta,
        )
    }

    pub fn with_root_policy(mut self, policy: RootPolicy) -> Self {
        self.root_policy = policy;
        self
    }

    /// Same template with a new target band.
    pub fn with_ratio(&self, r: f64, theta: f64) -> Result<Self> {
        Ok(Self::new(self.id.clone(), self.kind.clone(), r, theta)?.with_root_policy(self.root_policy))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn root_policy(&self) -> RootPolicy {
        self.root_policy
    }

    /// `min(r + theta, 1)`
    pub fn upper_ratio(&self) -> f64 {
        (self.r + self.theta).min(1.0)
    }

    /// `max(r - theta, 0)`
    pub fn lower_ratio(&self) -> f64 {
        (self.r - self.theta).max(0.0)
    }

    /// Class of the arc `head -> dep` without bounds checks.
    pub(crate) fn class_of(&self, s: &Sentence, head: usize, dep: usize) -> ArcClass {
        let oriented = |first_is_left: bool| {
            if first_is_left {
                ArcClass::Plus
            } else {
                ArcClass::Minus
            }
        };
        if head == 0 {
            return match (&self.kind, self.root_policy) {
                (ConstraintKind::Unary { pos }, RootPolicy::CountsLeft)
                    if s.upos(dep) == Some(pos.as_str()) =>
                {
                    ArcClass::Plus
                }
                _ => ArcClass::Neither,
            };
        }
        match &self.kind {
            ConstraintKind::Unary { pos } => {
                if s.upos(dep) == Some(pos.as_str()) {
                    oriented(head < dep)
                } else {
                    ArcClass::Neither
                }
            }
            ConstraintKind::Binary { pos1, pos2 } => {
                let h = s.upos(head);
                let d = s.upos(dep);
                if h == Some(pos1.as_str()) && d == Some(pos2.as_str()) {
                    oriented(head < dep)
                } else if h == Some(pos2.as_str()) && d == Some(pos1.as_str()) {
                    oriented(dep < head)
                } else {
                    ArcClass::Neither
                }
            }
        }
    }
}

pub fn classify_arc(c: &Constraint, s: &Sentence, head: usize, dep: usize) -> Result<ArcClass> {
    let n = s.len();
    if head > n || dep == 0 || dep > n || head == dep {
        return Err(Error::IndexOutOfRange(format!(
            "arc {head} -> {dep} in a sentence of {n} tokens"
        )));
    }
    Ok(c.class_of(s, head, dep))
}

/// `(plus, minus)` arc counts of a tree assignment.
pub fn arc_counts(c: &Constraint, corpus: &Corpus, trees: &[ParseTree]) -> Result<(usize, usize)> {
    corpus.check_aligned(trees.len())?;
    let mut plus = 0;
    let mut minus = 0;
    for (s, tree) in corpus.sentences().iter().zip(trees) {
        if tree.len() != s.len() {
            return Err(Error::Misaligned(format!(
                "sentence {}: tree has {} heads, sentence {} tokens",
                s.id(),
                tree.len(),
                s.len()
            )));
        }
        let (p, m) = tree_counts(c, s, tree);
        plus += p;
        minus += m;
    }
    Ok((plus, minus))
}

pub(crate) fn tree_counts(c: &Constraint, s: &Sentence, tree: &ParseTree) -> (usize, usize) {
    heads_counts(c, s, tree.heads())
}

pub(crate) fn heads_counts(c: &Constraint, s: &Sentence, heads: &[usize]) -> (usize, usize) {
    let mut plus = 0;
    let mut minus = 0;
    for (j, &h) in heads.iter().enumerate() {
        match c.class_of(s, h, j + 1) {
            ArcClass::Plus => plus += 1,
            ArcClass::Minus => minus += 1,
            ArcClass::Neither => {}
        }
    }
    (plus, minus)
}

pub(crate) fn ratio_from_counts(plus: usize, minus: usize) -> Option<f64> {
    let total = plus + minus;
    (total > 0).then(|| plus as f64 / total as f64)
}

/// Corpus ratio `|Plus| / |Plus ∪ Minus|` under `trees`; `None` when no arc
/// is classified.
pub fn ratio(c: &Constraint, corpus: &Corpus, trees: &[ParseTree]) -> Result<Option<f64>> {
    let (plus, minus) = arc_counts(c, corpus, trees)?;
    Ok(ratio_from_counts(plus, minus))
}

/// Ratio with tree indicators replaced by arc marginals.
pub fn expected_ratio(c: &Constraint, corpus: &Corpus, q: &[ArcDistribution]) -> Result<Option<f64>> {
    if q.len() != corpus.len() {
        return Err(Error::Misaligned(format!(
            "{} distributions for a corpus of {} sentences",
            q.len(),
            corpus.len()
        )));
    }
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (s, dist) in corpus.sentences().iter().zip(q) {
        let n = s.len();
        if dist.n() != n {
            return Err(Error::Misaligned(format!(
                "sentence {}: distribution over {} tokens, sentence has {n}",
                s.id(),
                dist.n()
            )));
        }
        for dep in 1..=n {
            for head in 0..=n {
                if head == dep {
                    continue;
                }
                match c.class_of(s, head, dep) {
                    ArcClass::Plus => plus += dist.get(head, dep),
                    ArcClass::Minus => minus += dist.get(head, dep),
                    ArcClass::Neither => {}
                }
            }
        }
    }
    let total = plus + minus;
    Ok((total > 0.0).then(|| plus / total))
}

/// Per-class feature value for one side of the band.
///
/// With effective ratio `e` (`r + theta` for `Upper`, `r - theta` for
/// `Lower`, both clamped to `[0, 1]`), `Upper` gives `1 - e` / `-e` / `0`
/// and `Lower` gives the negation of the same expression at its own `e`.
/// The expected sum is `≤ 0` exactly when the ratio is on the right side.
pub fn phi_for_class(c: &Constraint, direction: Direction, class: ArcClass) -> f64 {
    match direction {
        Direction::Upper => {
            let e = c.upper_ratio();
            match class {
                ArcClass::Plus => 1.0 - e,
                ArcClass::Minus => -e,
                ArcClass::Neither => 0.0,
            }
        }
        Direction::Lower => {
            let e = c.lower_ratio();
            match class {
                ArcClass::Plus => -(1.0 - e),
                ArcClass::Minus => e,
                ArcClass::Neither => 0.0,
            }
        }
    }
}

pub fn phi(c: &Constraint, direction: Direction, s: &Sentence, head: usize, dep: usize) -> f64 {
    phi_for_class(c, direction, c.class_of(s, head, dep))
}

/// Whether `measured` lies in the constraint's band. An undefined ratio is
/// vacuously satisfied.
pub fn is_satisfied(c: &Constraint, measured: Option<f64>) -> bool {
    match measured {
        None => true,
        Some(m) => {
            c.r - c.theta - RATIO_TOLERANCE <= m && m <= c.r + c.theta + RATIO_TOLERANCE
        }
    }
}

/// Distance by which `measured` falls outside the band; 0 when satisfied
/// or undefined.
pub fn violation(c: &Constraint, measured: Option<f64>) -> f64 {
    match measured {
        None => 0.0,
        Some(m) => {
            let excess = (c.r - m).abs() - c.theta;
            if excess > RATIO_TOLERANCE {
                excess
            } else {
                0.0
            }
        }
    }
}

/// Share of all arcs in `trees` that the constraint classifies as Plus or
/// Minus.
pub fn coverage(c: &Constraint, corpus: &Corpus, trees: &[ParseTree]) -> Result<f64> {
    let (plus, minus) = arc_counts(c, corpus, trees)?;
    let arcs: usize = trees.iter().map(ParseTree::len).sum();
    if arcs == 0 {
        return Ok(0.0);
    }
    Ok((plus + minus) as f64 / arcs as f64)
}

/// Coverage-weighted mean absolute difference between source and target
/// ratios.
pub fn ratio_gap(
    constraints: &[Constraint],
    source_ratios: &[f64],
    target_ratios: &[f64],
    coverages: &[f64],
) -> Result<f64> {
    let n = constraints.len();
    if source_ratios.len() != n || target_ratios.len() != n || coverages.len() != n {
        return Err(Error::Misaligned(format!(
            "{n} constraints, {} source ratios, {} target ratios, {} coverages",
            source_ratios.len(),
            target_ratios.len(),
            coverages.len()
        )));
    }
    if coverages.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Param("coverages must be non-negative".into()));
    }
    let total: f64 = coverages.iter().sum();
    if total <= 0.0 {
        return Err(Error::Param("all coverages are zero".into()));
    }
    let weighted: f64 = source_ratios
        .iter()
        .zip(target_ratios)
        .zip(coverages)
        .map(|((s, t), w)| w * (s - t).abs())
        .sum();
    Ok(weighted / total)
}

#[derive(Debug, Serialize, Deserialize)]
struct ConstraintRecord {
    id: String,
    kind: String,
    pos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos2: Option<String>,
    r: f64,
    theta: f64,
}

impl From<&Constraint> for ConstraintRecord {
    fn from(c: &Constraint) -> Self {
        let (kind, pos, pos2) = match &c.kind {
            ConstraintKind::Unary { pos } => ("unary", pos.clone(), None),
            ConstraintKind::Binary { pos1, pos2 } => ("binary", pos1.clone(), Some(pos2.clone())),
        };
        ConstraintRecord {
            id: c.id.clone(),
            kind: kind.to_string(),
            pos,
            pos2,
            r: c.r,
            theta: c.theta,
        }
    }
}

impl TryFrom<ConstraintRecord> for Constraint {
    type Error = Error;

    fn try_from(rec: ConstraintRecord) -> Result<Self> {
        let kind = match (rec.kind.as_str(), rec.pos2) {
            ("unary", None) => ConstraintKind::Unary { pos: rec.pos },
            ("unary", Some(_)) => {
                return Err(Error::Constraint(format!("{}: unary constraint with pos2", rec.id)))
            }
            ("binary", Some(pos2)) => ConstraintKind::Binary { pos1: rec.pos, pos2 },
            ("binary", None) => {
                return Err(Error::Constraint(format!("{}: binary constraint needs pos2", rec.id)))
            }
            (other, _) => {
                return Err(Error::Constraint(format!("{}: unknown kind {other:?}", rec.id)))
            }
        };
        Constraint::new(rec.id, kind, rec.r, rec.theta)
    }
}

pub fn read_constraints<R: Read>(reader: R) -> Result<Vec<Constraint>> {
    let records: Vec<ConstraintRecord> = serde_json::from_reader(reader)?;
    records.into_iter().map(Constraint::try_from).collect()
}

/// Pretty-printed JSON array followed by a newline.
pub fn write_constraints<W: Write>(mut writer: W, constraints: &[Constraint]) -> Result<()> {
    let records: Vec<ConstraintRecord> = constraints.iter().map(ConstraintRecord::from).collect();
    serde_json::to_writer_pretty(&mut writer, &records)?;
    writeln!(writer)?;
    Ok(())
}
