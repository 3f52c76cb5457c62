//! Constraint compilation from typology data, ratio estimation and
//! synthetic corpora.

mod estimate;
mod regression;
mod synth;
mod wals;

pub use estimate::{estimate_ratio, RatioEstimate};
pub use regression::{fit_unary_ratio, FeatureVector, UnaryFit};
pub use synth::{
    generate_synthetic, Corruption, Planted, Side, SyntheticCorpus, SyntheticSpec, ORACLE_THETA,
};
pub use wals::{
    compile_binary, compile_constraints, orientation_for, CompiledConstraints, Orientation,
    Template, TemplateConfig, TypologyTable, UnaryTrainingRatios, DOMINANT, NOUN_FEATURES,
    NO_DOMINANT, UNARY_THETA,
};
