//! Dependency parsing under corpus-wide word-order ratio constraints.
//!
//! An arc-factored parser's scores are decoded either independently per
//! sentence or jointly with constraints on the share of arcs whose head
//! precedes the dependent. Two inference methods are provided: Lagrangian
//! relaxation of the hard constraints ([`lagrangian`]) and posterior
//! regularization of the arc marginals ([`posterior`]).

pub mod compile;
pub mod config;
pub mod conllu;
pub mod constraints;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod lagrangian;
pub mod posterior;
pub mod report;
pub mod scores;

pub use constraints::{Constraint, ConstraintKind, RootPolicy};
pub use corpus::{ArcDistribution, Corpus, ParseTree, ScoreMatrix, Sentence, Token};
pub use decoder::{decode, mst_decode, projective_decode, DecodeOptions};
pub use error::{Error, Result};
pub use lagrangian::{lr_infer, LrParams};
pub use posterior::{pr_infer, PrParams};
