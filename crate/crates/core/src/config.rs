//! Pipeline configuration: a single JSON document, with CLI flags layered
//! on top. Every field has a default so small configs stay small.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curriculum::Hyperparams;
use crate::judger::JudgeMode;
use crate::provider::DEFAULT_API_KEY_ENV;
use crate::synthesis::{CategoryPolicy, GenParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    Http,
}

/// Backend selection and transport settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSettings {
    pub kind: ProviderKind,
    pub endpoint: String,
    pub api_key_env: String,
    pub max_concurrency: usize,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    pub cache_dir: Option<PathBuf>,
    /// Script file for the mock backend: `{"entries": {"prompt": "reply"}}`.
    pub mock_script: Option<PathBuf>,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Http,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            max_concurrency: 4,
            max_retries: 3,
            retry_base_ms: 250,
            cache_dir: None,
            mock_script: None,
        }
    }
}

/// Seed-loading knobs; see `seeds::SeedFilters` for the semantics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedFilterSettings {
    pub oasst_rank0_turn0: bool,
    pub min_ref_output_words: Option<u32>,
}

impl Default for SeedFilterSettings {
    fn default() -> Self {
        Self {
            oasst_rank0_turn0: true,
            min_ref_output_words: Some(10),
        }
    }
}

impl SeedFilterSettings {
    pub fn to_filters(&self) -> crate::seeds::SeedFilters {
        crate::seeds::SeedFilters {
            oasst_rank0_turn0: self.oasst_rank0_turn0,
            min_ref_output_words: self.min_ref_output_words,
        }
    }
}

fn default_n_constraints() -> usize {
    5
}

fn default_merge_plan() -> Vec<Vec<usize>> {
    vec![vec![1, 2, 3], vec![4, 5]]
}

fn default_replay_budget() -> usize {
    10_000
}

fn default_max_seeds() -> usize {
    1_500
}

fn default_batch_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seeds_path: PathBuf,
    pub output_dir: PathBuf,
    pub n_constraints: usize,
    pub merge_plan: Vec<Vec<usize>>,
    pub replay_path: Option<PathBuf>,
    pub replay_budget: usize,
    /// When true the full budget applies to every stage instead of being
    /// split across stages proportionally.
    pub replay_budget_per_stage: bool,
    pub max_seeds: usize,
    /// Fixed by default so runs are reproducible unless explicitly reseeded.
    pub rng_seed: u64,
    pub judger_mode: JudgeMode,
    pub category_policy: CategoryPolicy,
    pub provider: ProviderSettings,
    pub generation: GenParams,
    pub seed_filters: SeedFilterSettings,
    /// Optional override of the built-in hard-constraint list.
    pub hard_constraints_path: Option<PathBuf>,
    /// Chains processed in parallel.
    pub batch_concurrency: usize,
    pub hyperparams: Hyperparams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seeds_path: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            n_constraints: default_n_constraints(),
            merge_plan: default_merge_plan(),
            replay_path: None,
            replay_budget: default_replay_budget(),
            replay_budget_per_stage: false,
            max_seeds: default_max_seeds(),
            rng_seed: 0,
            judger_mode: JudgeMode::BothOrders,
            category_policy: CategoryPolicy::default(),
            provider: ProviderSettings::default(),
            generation: GenParams::default(),
            seed_filters: SeedFilterSettings::default(),
            hard_constraints_path: None,
            batch_concurrency: default_batch_concurrency(),
            hyperparams: Hyperparams::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} is not valid JSON: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&body).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Structural validation; runs before any provider call.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_constraints < 1 {
            return Err(ConfigError::Invalid(
                "n_constraints must be at least 1".into(),
            ));
        }
        let mut covered: BTreeSet<usize> = BTreeSet::new();
        for (idx, set) in self.merge_plan.iter().enumerate() {
            if set.is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "merge_plan set {idx} is empty"
                )));
            }
            for &k in set {
                if k < 1 || k > self.n_constraints {
                    return Err(ConfigError::Invalid(format!(
                        "merge_plan contains k={k} outside 1..={}",
                        self.n_constraints
                    )));
                }
                if !covered.insert(k) {
                    return Err(ConfigError::Invalid(format!(
                        "merge_plan sets overlap on k={k}"
                    )));
                }
            }
        }
        for k in 1..=self.n_constraints {
            if !covered.contains(&k) {
                return Err(ConfigError::Invalid(format!(
                    "merge_plan does not cover k={k} (n_constraints={})",
                    self.n_constraints
                )));
            }
        }
        if self.provider.max_concurrency == 0 {
            return Err(ConfigError::Invalid(
                "provider.max_concurrency must be at least 1".into(),
            ));
        }
        if self.batch_concurrency == 0 {
            return Err(ConfigError::Invalid(
                "batch_concurrency must be at least 1".into(),
            ));
        }
        if self.provider.kind == ProviderKind::Mock && self.provider.mock_script.is_none() {
            return Err(ConfigError::Invalid(
                "provider.kind is mock but provider.mock_script is not set".into(),
            ));
        }
        self.category_policy
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}
