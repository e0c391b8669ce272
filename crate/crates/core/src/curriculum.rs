//! Curriculum assembly: bin preference pairs by constraint count, allocate
//! the replay pool proportionally, and emit per-stage training files plus an
//! ordered training manifest.
//!
//! Stages train easy to hard, so the manifest orders them by ascending
//! maximum constraint count. Replay examples enter only the SFT stream —
//! they have no rejected response, so they cannot form DPO triplets.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl;
use crate::judger::PreferencePair;

/// One SFT example; replay entries are flagged so trainers and validators
/// can tell them apart from projected triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftPair {
    pub instruction: String,
    pub response: String,
    pub is_replay: bool,
}

/// An ordered training stage covering a set of constraint counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumStage {
    pub stage_id: String,
    /// The exact constraint counts this stage covers, sorted ascending.
    pub k_values: Vec<usize>,
    pub dpo_triplets: Vec<PreferencePair>,
    pub sft_pairs: Vec<SftPair>,
    pub replay_count: usize,
}

impl CurriculumStage {
    pub fn k_min(&self) -> usize {
        *self.k_values.first().expect("k_values non-empty")
    }

    pub fn k_max(&self) -> usize {
        *self.k_values.last().expect("k_values non-empty")
    }
}

/// A general-conversation example mixed into SFT streams against
/// catastrophic forgetting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayExample {
    pub instruction: String,
    pub response: String,
}

#[derive(Debug, Clone, Default)]
pub struct ReplayPool {
    pub examples: Vec<ReplayExample>,
}

impl ReplayPool {
    /// Loads `{"instruction","response"}` records, one per line.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CurriculumError> {
        let examples = jsonl::read(path)?;
        Ok(Self { examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("merge plan set {0} is empty")]
    EmptyPlanSet(usize),
    #[error("merge plan sets overlap on k={0}")]
    OverlappingSets(usize),
    #[error("pair with k={k} (seed {seed_id}) falls outside every merge-plan set")]
    UncoveredK { k: usize, seed_id: String },
    #[error("all stage sizes are zero but the replay budget is {0}")]
    AllZeroSizes(usize),
    #[error("replay request of {requested} exceeds pool size {available}")]
    ReplayOverdraw { requested: usize, available: usize },
    #[error("stages must be ordered by ascending k_max before the manifest is written")]
    UnsortedStages,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
}

/// Binning result: the ordered stages plus advisory warnings (e.g. a stage
/// that received no pairs).
#[derive(Debug, Clone)]
pub struct BinOutcome {
    pub stages: Vec<CurriculumStage>,
    pub warnings: Vec<String>,
}

fn stage_id_for(ks: &[usize]) -> String {
    let min = ks.first().expect("non-empty");
    let max = ks.last().expect("non-empty");
    if min == max {
        format!("k{min}")
    } else {
        format!("k{min}-{max}")
    }
}

/// Routes pairs into one stage per merge-plan set, ordered by ascending
/// maximum k. SFT pairs are the (instruction, chosen) projections of each
/// stage's triplets.
pub fn bin_by_constraint_count(
    pairs: &[PreferencePair],
    merge_plan: &[Vec<usize>],
) -> Result<BinOutcome, CurriculumError> {
    let mut seen: HashSet<usize> = HashSet::new();
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(merge_plan.len());
    for (idx, set) in merge_plan.iter().enumerate() {
        if set.is_empty() {
            return Err(CurriculumError::EmptyPlanSet(idx));
        }
        let mut ks: Vec<usize> = set.clone();
        ks.sort_unstable();
        ks.dedup();
        for &k in &ks {
            if !seen.insert(k) {
                return Err(CurriculumError::OverlappingSets(k));
            }
        }
        sets.push(ks);
    }
    sets.sort_by_key(|ks| *ks.last().expect("non-empty"));

    let mut stages: Vec<CurriculumStage> = sets
        .into_iter()
        .map(|ks| CurriculumStage {
            stage_id: stage_id_for(&ks),
            k_values: ks,
            dpo_triplets: Vec::new(),
            sft_pairs: Vec::new(),
            replay_count: 0,
        })
        .collect();

    for pair in pairs {
        let stage = stages
            .iter_mut()
            .find(|s| s.k_values.contains(&pair.k))
            .ok_or_else(|| CurriculumError::UncoveredK {
                k: pair.k,
                seed_id: pair.seed_id.clone(),
            })?;
        stage.sft_pairs.push(SftPair {
            instruction: pair.instruction.clone(),
            response: pair.chosen.clone(),
            is_replay: false,
        });
        stage.dpo_triplets.push(pair.clone());
    }

    let warnings = stages
        .iter()
        .filter(|s| s.dpo_triplets.is_empty())
        .map(|s| format!("stage {} received zero preference pairs", s.stage_id))
        .collect();

    Ok(BinOutcome { stages, warnings })
}

/// Largest-remainder proportional allocation: each stage gets
/// floor(budget * size / total), and the leftover units go to the largest
/// fractional remainders (ties to the lower index). Sums to the budget
/// exactly.
pub fn allocate_replay(
    stage_sizes: &[usize],
    budget: usize,
) -> Result<Vec<usize>, CurriculumError> {
    assert!(
        !stage_sizes.is_empty(),
        "allocate_replay requires at least one stage"
    );
    if budget == 0 {
        return Ok(vec![0; stage_sizes.len()]);
    }
    let total: u128 = stage_sizes.iter().map(|&s| s as u128).sum();
    if total == 0 {
        return Err(CurriculumError::AllZeroSizes(budget));
    }

    let budget_w = budget as u128;
    let mut floors: Vec<usize> = Vec::with_capacity(stage_sizes.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(stage_sizes.len());
    for (idx, &size) in stage_sizes.iter().enumerate() {
        let scaled = budget_w * size as u128;
        floors.push((scaled / total) as usize);
        remainders.push((scaled % total, idx));
    }

    let assigned: usize = floors.iter().sum();
    let mut leftover = budget - assigned;
    // Largest remainder first; equal remainders favor the lower index.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, idx) in remainders {
        if leftover == 0 {
            break;
        }
        floors[idx] += 1;
        leftover -= 1;
    }
    Ok(floors)
}

/// Samples `count` pool examples without replacement (seeded) and appends
/// them to the stage's SFT stream flagged as replay. DPO triplets are
/// untouched.
pub fn mix_replay<R: Rng>(
    mut stage: CurriculumStage,
    pool: &ReplayPool,
    count: usize,
    rng: &mut R,
) -> Result<CurriculumStage, CurriculumError> {
    if count > pool.len() {
        return Err(CurriculumError::ReplayOverdraw {
            requested: count,
            available: pool.len(),
        });
    }
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, pool.len(), count).into_vec();
    picked.sort_unstable();
    for idx in picked {
        let example = &pool.examples[idx];
        stage.sft_pairs.push(SftPair {
            instruction: example.instruction.clone(),
            response: example.response.clone(),
            is_replay: true,
        });
    }
    stage.replay_count += count;
    Ok(stage)
}

/// Wire row of a stage's dpo.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpoRow {
    pub instruction: String,
    pub chosen: String,
    pub rejected: String,
    pub k: usize,
    pub seed_id: String,
}

/// Manifest entry describing one emitted stage. Paths are relative to the
/// output root so artifact trees are relocatable and reproducible byte for
/// byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDescriptor {
    pub stage_id: String,
    pub dir: String,
    pub k_values: Vec<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub dpo_path: String,
    pub sft_path: String,
    pub dpo_count: usize,
    pub sft_count: usize,
    pub replay_count: usize,
}

/// Writes the stage's dpo.jsonl and sft.jsonl under `root/dirname` and
/// returns the descriptor recorded in the manifest.
pub fn emit_stage_files(
    stage: &CurriculumStage,
    root: impl AsRef<Path>,
    dirname: &str,
) -> Result<StageDescriptor, CurriculumError> {
    let dir = root.as_ref().join(dirname);
    std::fs::create_dir_all(&dir).map_err(|source| CurriculumError::Io {
        path: dir.display().to_string(),
        source,
    })?;

    let dpo_rows: Vec<DpoRow> = stage
        .dpo_triplets
        .iter()
        .map(|pair| DpoRow {
            instruction: pair.instruction.clone(),
            chosen: pair.chosen.clone(),
            rejected: pair.rejected.clone(),
            k: pair.k,
            seed_id: pair.seed_id.clone(),
        })
        .collect();

    jsonl::write(dir.join("dpo.jsonl"), &dpo_rows)?;
    jsonl::write(dir.join("sft.jsonl"), &stage.sft_pairs)?;

    Ok(StageDescriptor {
        stage_id: stage.stage_id.clone(),
        dir: dirname.to_string(),
        k_values: stage.k_values.clone(),
        k_min: stage.k_min(),
        k_max: stage.k_max(),
        dpo_path: format!("{dirname}/dpo.jsonl"),
        sft_path: format!("{dirname}/sft.jsonl"),
        dpo_count: stage.dpo_triplets.len(),
        sft_count: stage.sft_pairs.len(),
        replay_count: stage.replay_count,
    })
}

/// Training hyperparameters recorded in the manifest for the downstream
/// trainer; defaults follow the DPO-with-LoRA setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: u32,
    pub scheduler: String,
    pub warmup_ratio: f64,
    pub grad_accum: u32,
    pub adapter: String,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            beta: 0.1,
            learning_rate: 5.0e-6,
            epochs: 3,
            scheduler: "cosine".into(),
            warmup_ratio: 0.1,
            grad_accum: 8,
            adapter: "lora-all".into(),
        }
    }
}

/// The ordered training manifest tying the stage files together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub stages: Vec<StageDescriptor>,
    pub replay_budget: usize,
    pub hyperparams: Hyperparams,
}

/// Writes the manifest after checking the stage order invariant.
pub fn emit_training_manifest(
    stages: &[StageDescriptor],
    replay_budget: usize,
    hyperparams: &Hyperparams,
    path: impl AsRef<Path>,
) -> Result<TrainingManifest, CurriculumError> {
    if stages.windows(2).any(|w| w[0].k_max > w[1].k_max) {
        return Err(CurriculumError::UnsortedStages);
    }
    let manifest = TrainingManifest {
        stages: stages.to_vec(),
        replay_budget,
        hyperparams: hyperparams.clone(),
    };
    let path = path.as_ref();
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(path, body + "\n").map_err(|source| CurriculumError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(manifest)
}

/// Loads a manifest back; used by the validator and the stats command.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<TrainingManifest, CurriculumError> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|source| CurriculumError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|e| CurriculumError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}

/// Directory name for a stage under the output root.
pub fn stage_dirname(stage_id: &str) -> String {
    format!("stage_{stage_id}")
}
