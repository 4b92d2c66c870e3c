//! Instance files: one law with its rewards, or a weighted list of prompts.
//!
//! ```json
//! {"support": ["a", "b"], "probs": [0.5, 0.5], "reward": [0.0, 1.0], "golden_reward": [0.0, 0.8]}
//! {"prompts": [{"weight": 0.5, "support": ["a"], "probs": [1.0], "reward": [0.0]}, ...]}
//! ```
//!
//! Unknown fields are rejected. Probabilities are validated, never renormalized.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use alignbounds_core::goodhart::RewardPair;
use alignbounds_core::{FiniteDist, RewardMap};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceSpec {
    support: Vec<String>,
    probs: Vec<f64>,
    #[serde(default)]
    reward: Option<Vec<f64>>,
    #[serde(default)]
    golden_reward: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptSpec {
    weight: f64,
    support: Vec<String>,
    probs: Vec<f64>,
    #[serde(default)]
    reward: Option<Vec<f64>>,
    #[serde(default)]
    golden_reward: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiSpec {
    prompts: Vec<PromptSpec>,
}

/// A validated law with optional proxy and golden rewards.
#[derive(Debug, Clone)]
pub struct Instance {
    pub source: String,
    pub dist: FiniteDist,
    reward: Option<RewardMap>,
    golden: Option<RewardMap>,
}

impl Instance {
    fn build(source: &str, support: Vec<String>, probs: Vec<f64>, reward: Option<Vec<f64>>, golden: Option<Vec<f64>>) -> CliResult<Self> {
        let bad = |e: alignbounds_core::Error| CliError::config(format!("{source}: {e}"));
        let dist = FiniteDist::new(support, probs).map_err(bad)?;
        let map = |values: Option<Vec<f64>>, field: &str| -> CliResult<Option<RewardMap>> {
            let Some(values) = values else { return Ok(None) };
            if values.len() != dist.len() {
                return Err(CliError::config(format!(
                    "{source}: reward/support mismatch: `{field}` has {} entries for {} symbols",
                    values.len(),
                    dist.len()
                )));
            }
            RewardMap::new(values).map(Some).map_err(bad)
        };
        let reward = map(reward, "reward")?;
        let golden = map(golden, "golden_reward")?;
        Ok(Instance {
            source: source.to_string(),
            dist,
            reward,
            golden,
        })
    }

    pub fn reward(&self) -> CliResult<&RewardMap> {
        self.reward
            .as_ref()
            .ok_or_else(|| CliError::config(format!("{}: field `reward` is required", self.source)))
    }

    pub fn pair(&self) -> CliResult<RewardPair> {
        let golden = self
            .golden
            .as_ref()
            .ok_or_else(|| CliError::config(format!("{}: field `golden_reward` is required", self.source)))?;
        Ok(RewardPair::new(self.reward()?.clone(), golden.clone())?)
    }

    /// One row per symbol: `symbol,prob[,reward][,golden_reward]`.
    pub fn to_csv_rows(&self) -> (Vec<String>, Vec<Vec<crate::output::Cell>>) {
        use crate::output::Cell;
        let mut header = vec!["symbol".to_string(), "prob".to_string()];
        if self.reward.is_some() {
            header.push("reward".into());
        }
        if self.golden.is_some() {
            header.push("golden_reward".into());
        }
        let rows = (0..self.dist.len())
            .map(|i| {
                let mut row = vec![Cell::Text(self.dist.support()[i].clone()), Cell::Num(self.dist.probs()[i])];
                if let Some(r) = &self.reward {
                    row.push(Cell::Num(r.values()[i]));
                }
                if let Some(g) = &self.golden {
                    row.push(Cell::Num(g.values()[i]));
                }
                row
            })
            .collect();
        (header, rows)
    }
}

/// Either a single law or weighted prompts whose weights sum to one.
#[derive(Debug, Clone)]
pub enum InstanceFile {
    Single(Instance),
    Prompts(Vec<(f64, Instance)>),
}

impl InstanceFile {
    /// The single law; multi-prompt files are rejected with the command name.
    pub fn single(self, command: &str) -> CliResult<Instance> {
        match self {
            InstanceFile::Single(i) => Ok(i),
            InstanceFile::Prompts(_) => Err(CliError::config(format!(
                "`{command}` takes a single-law instance, not a `prompts` list"
            ))),
        }
    }
}

pub fn parse_instance(source: &str, bytes: &[u8]) -> CliResult<InstanceFile> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| CliError::config(format!("{source}: malformed JSON: {e}")))?;
    let schema = |e: serde_json::Error| CliError::config(format!("{source}: {e}"));
    if value.get("prompts").is_some() {
        let multi: MultiSpec = serde_json::from_value(value).map_err(schema)?;
        if multi.prompts.is_empty() {
            return Err(CliError::config(format!("{source}: `prompts` is empty")));
        }
        let prompts = multi
            .prompts
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                let label = format!("{source} prompt {k}");
                Instance::build(&label, p.support, p.probs, p.reward, p.golden_reward).map(|i| (p.weight, i))
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(InstanceFile::Prompts(prompts))
    } else {
        let spec: InstanceSpec = serde_json::from_value(value).map_err(schema)?;
        Instance::build(source, spec.support, spec.probs, spec.reward, spec.golden_reward).map(InstanceFile::Single)
    }
}

/// Input files read once up front, so hashing and parsing see the same bytes.
#[derive(Debug, Default)]
pub struct Inputs {
    files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Inputs {
    pub fn read(paths: &[&Path]) -> CliResult<Self> {
        let mut files = BTreeMap::new();
        for path in paths {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            files.insert(path.to_path_buf(), bytes);
        }
        Ok(Inputs { files })
    }

    pub fn load(&self, path: &Path) -> CliResult<InstanceFile> {
        let bytes = self
            .files
            .get(path)
            .ok_or_else(|| CliError::config(format!("{} was not read", path.display())))?;
        parse_instance(&path.display().to_string(), bytes)
    }

    /// SHA-256 of each input, in path order.
    pub fn digests(&self) -> Vec<String> {
        self.files.values().map(|b| hex(&Sha256::digest(b))).collect()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
