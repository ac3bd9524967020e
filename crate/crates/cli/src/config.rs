use std::path::{Path, PathBuf};

use camsep_core::combine::{OverlapPolicy, RenormPolicy};
use camsep_core::fewshot::ClusterConfig;
use camsep_core::poisson::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run can take from the config file. Flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub solver: SolverConfig,
    pub cluster: ClusterConfig,
    pub io: IoSection,
    pub combine: CombineSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    /// Attention inputs, in the order the subcommand consumes them.
    pub attn: Vec<PathBuf>,
    pub mask: Option<PathBuf>,
    pub values: Option<PathBuf>,
    pub target_values: Option<PathBuf>,
    pub preserve_mask: Option<PathBuf>,
    /// `mask:attention` pairs for region composition.
    pub pairs: Vec<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombineSection {
    pub weights: Vec<f64>,
    pub policy: RenormPolicy,
    pub overlap: OverlapPolicy,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Replaces `slot` when the flag was given.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

/// Replaces a list when the flag was given at least once.
pub fn set_list<T>(slot: &mut Vec<T>, flag: Vec<T>) {
    if !flag.is_empty() {
        *slot = flag;
    }
}

pub fn require<'a, T>(value: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing {what} (flag or [io] entry)")))
}
