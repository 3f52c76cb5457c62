//! Typology table ingestion and compilation of constraint templates.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::regression::{fit_unary_ratio, FeatureVector};
use crate::constraints::Constraint;
use crate::error::{Error, Result};

/// Ratio and margin for a dominant order ("more than 0.75 of the time").
pub const DOMINANT: (f64, f64) = (0.875, 0.125);
/// Ratio and margin when no order dominates or the feature is missing.
pub const NO_DOMINANT: (f64, f64) = (0.5, 0.25);

/// Default margin for regressed unary ratios.
pub const UNARY_THETA: f64 = 0.125;

/// Features describing noun-related word order.
pub const NOUN_FEATURES: [&str; 7] = ["82A", "83A", "85A", "86A", "87A", "88A", "89A"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "pos1_first_is_dominant")]
    Pos1First,
    #[serde(rename = "pos2_first_is_dominant")]
    Pos2First,
    #[serde(rename = "no_dominant_or_missing")]
    NoDominant,
}

/// `(r, theta)` for a binary constraint given the dominant order.
pub fn compile_binary(orientation: Orientation) -> (f64, f64) {
    match orientation {
        Orientation::Pos1First => DOMINANT,
        Orientation::Pos2First => (1.0 - DOMINANT.0, DOMINANT.1),
        Orientation::NoDominant => NO_DOMINANT,
    }
}

/// Orientation of a categorical value under a configured mapping. A
/// missing value means no dominant order.
pub fn orientation_for(
    value: Option<&str>,
    mapping: &BTreeMap<String, Orientation>,
) -> Result<Orientation> {
    match value {
        None => Ok(Orientation::NoDominant),
        Some(v) => mapping
            .get(v)
            .copied()
            .ok_or_else(|| Error::Compile(format!("no orientation configured for value {v:?}"))),
    }
}

/// Language code → feature code → categorical value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypologyTable {
    rows: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Deserialize)]
struct TypologyRecord {
    lang: String,
    feature: String,
    value: String,
}

impl TypologyTable {
    /// Reads a `lang,feature,value` CSV with a header row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut table = TypologyTable::default();
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for record in csv.deserialize() {
            let rec: TypologyRecord = record?;
            let features = table.rows.entry(rec.lang.clone()).or_default();
            if features.insert(rec.feature.clone(), rec.value).is_some() {
                return Err(Error::Compile(format!(
                    "duplicate entry for {} / {}",
                    rec.lang, rec.feature
                )));
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, lang: &str, feature: &str, value: &str) {
        self.rows
            .entry(lang.to_string())
            .or_default()
            .insert(feature.to_string(), value.to_string());
    }

    pub fn get(&self, lang: &str, feature: &str) -> Option<&str> {
        self.rows.get(lang)?.get(feature).map(String::as_str)
    }

    pub fn contains_language(&self, lang: &str) -> bool {
        self.rows.contains_key(lang)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn feature_vector(&self, lang: &str, features: &[String]) -> FeatureVector {
        features
            .iter()
            .map(|f| self.get(lang, f).map(str::to_string))
            .collect()
    }
}

fn default_unary_theta() -> f64 {
    UNARY_THETA
}

fn default_noun_features() -> Vec<String> {
    NOUN_FEATURES.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Template {
    /// Ratio regressed from typology features of other languages.
    Unary {
        id: String,
        pos: String,
        #[serde(default = "default_noun_features")]
        features: Vec<String>,
        #[serde(default = "default_unary_theta")]
        theta: f64,
    },
    /// Ratio read off a single feature's dominant order.
    Binary {
        id: String,
        pos: String,
        pos2: String,
        feature: String,
        values: BTreeMap<String, Orientation>,
    },
}

impl Template {
    pub fn id(&self) -> &str {
        match self {
            Template::Unary { id, .. } | Template::Binary { id, .. } => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateConfig {
    pub templates: Vec<Template>,
}

impl TemplateConfig {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Template id → language → observed ratio, used as regression targets.
pub type UnaryTrainingRatios = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledConstraints {
    pub constraints: Vec<Constraint>,
    /// Human-readable notes (e.g. regression fallbacks).
    pub notes: Vec<String>,
}

/// Compile every template for `lang`. Unary templates regress over all
/// languages in `training` except `lang` itself.
pub fn compile_constraints(
    table: &TypologyTable,
    lang: &str,
    config: &TemplateConfig,
    training: &UnaryTrainingRatios,
) -> Result<CompiledConstraints> {
    let mut constraints = Vec::new();
    let mut notes = Vec::new();
    for template in &config.templates {
        match template {
            Template::Binary {
                id,
                pos,
                pos2,
                feature,
                values,
            } => {
                let orientation = orientation_for(table.get(lang, feature), values)
                    .map_err(|e| Error::Compile(format!("{id}: {e}")))?;
                let (r, theta) = compile_binary(orientation);
                constraints.push(Constraint::binary(id.clone(), pos.clone(), pos2.clone(), r, theta)?);
            }
            Template::Unary {
                id,
                pos,
                features,
                theta,
            } => {
                let ratios = training.get(id).ok_or_else(|| {
                    Error::Compile(format!("{id}: no training ratios for unary template"))
                })?;
                let train: Vec<(FeatureVector, f64)> = ratios
                    .iter()
                    .filter(|(l, _)| l.as_str() != lang)
                    .map(|(l, &r)| (table.feature_vector(l, features), r))
                    .collect();
                let fit = fit_unary_ratio(&train, &table.feature_vector(lang, features))
                    .map_err(|e| Error::Compile(format!("{id}: {e}")))?;
                if fit.fallback {
                    notes.push(format!("{id}: degenerate regression, used mean training ratio"));
                }
                constraints.push(Constraint::unary(id.clone(), pos.clone(), fit.ratio, *theta)?);
            }
        }
    }
    Ok(CompiledConstraints { constraints, notes })
}
