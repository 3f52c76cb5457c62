//! Run configuration loaded from JSON.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constraints::{Constraint, RootPolicy};
use crate::decoder::DecodeOptions;
use crate::error::Result;
use crate::lagrangian::LrParams;
use crate::posterior::PrParams;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub lr: LrParams,
    pub pr: PrParams,
    /// Count arcs from the root as left-headed.
    pub root_counts_left: bool,
    pub single_root: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let config: Config = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        config.lr.validate()?;
        config.pr.validate()?;
        Ok(config)
    }

    pub fn root_policy(&self) -> RootPolicy {
        if self.root_counts_left {
            RootPolicy::CountsLeft
        } else {
            RootPolicy::Neither
        }
    }

    pub fn decode_options(&self, projective: bool) -> DecodeOptions {
        DecodeOptions {
            projective,
            single_root: self.single_root,
        }
    }

    pub fn apply_root_policy(&self, constraints: Vec<Constraint>) -> Vec<Constraint> {
        let policy = self.root_policy();
        constraints.into_iter().map(|c| c.with_root_policy(policy)).collect()
    }
}
