//! Stage orchestration: seeds → chains → pairs → stages → manifest →
//! reports, with per-chain parallelism and deterministic seeding.
//!
//! Every chain derives its own random streams from the run seed and its
//! seed id, so a batch is byte-reproducible regardless of scheduling, and
//! partial re-runs reuse the provider cache. Per-chain failures are logged
//! and counted, never abort the batch; a stage-level failure halts the run
//! with the stage name.

use std::collections::HashMap;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{self, StageFiles, VerbLexicon};
use crate::builder::{build_chain, InstructionChain, Synthesizer};
use crate::config::{PipelineConfig, ProviderKind, ProviderSettings};
use crate::curriculum::{
    allocate_replay, bin_by_constraint_count, emit_stage_files, emit_training_manifest,
    load_manifest, mix_replay, stage_dirname, ReplayPool, StageDescriptor, TrainingManifest,
};
use crate::jsonl;
use crate::judger::{reorder_chain, ComparisonRecord, PreferencePair};
use crate::provider::{HttpBackend, MockBackend, Provider, ProviderConfig};
use crate::seeds::{dedupe, load_seeds, SeedInstruction};
use crate::synthesis::HardConstraintList;

/// A stage failure: the stage name plus a human-readable message, also
/// emitted as the machine-readable error report.
#[derive(Debug, Clone, Serialize, Deserialize, thiserror::Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: String,
    pub message: String,
}

impl PipelineError {
    fn new(stage: &str, message: impl ToString) -> Self {
        Self {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }
}

/// Derives an independent ChaCha stream from the run seed, a domain tag,
/// and a chain identifier. Stable across platforms and releases: the seed
/// bytes are a SHA-256 over a versioned, length-prefixed encoding.
pub fn derive_rng(root_seed: u64, domain: &str, id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"constraint-forge.rng.v1");
    hasher.update(root_seed.to_le_bytes());
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update((id.len() as u64).to_le_bytes());
    hasher.update(id.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Domain tags for the per-chain random streams.
pub const RNG_DOMAIN_SYNTH: &str = "synth";
pub const RNG_DOMAIN_JUDGE: &str = "judge";
pub const RNG_DOMAIN_REPLAY: &str = "replay";

#[derive(Debug, Deserialize)]
struct MockScript {
    entries: HashMap<String, String>,
}

/// Builds the provider described by the settings. Mock providers load their
/// exhaustive script table from `mock_script`.
pub fn build_provider(settings: &ProviderSettings) -> Result<Provider, PipelineError> {
    let stage = "provider";
    let config = ProviderConfig {
        endpoint: settings.endpoint.clone(),
        api_key_env: settings.api_key_env.clone(),
        max_concurrency: settings.max_concurrency,
        max_retries: settings.max_retries,
        retry_base_ms: settings.retry_base_ms,
        cache_dir: settings.cache_dir.clone(),
    };
    match settings.kind {
        ProviderKind::Mock => {
            let path = settings
                .mock_script
                .as_ref()
                .ok_or_else(|| PipelineError::new(stage, "mock provider requires mock_script"))?;
            let body = std::fs::read_to_string(path).map_err(|e| {
                PipelineError::new(stage, format!("cannot read {}: {e}", path.display()))
            })?;
            let script: MockScript = serde_json::from_str(&body).map_err(|e| {
                PipelineError::new(
                    stage,
                    format!("malformed mock script {}: {e}", path.display()),
                )
            })?;
            Provider::new(Box::new(MockBackend::with_table(script.entries)), &config)
                .map_err(|e| PipelineError::new(stage, e))
        }
        ProviderKind::Http => {
            let backend = HttpBackend::new(settings.endpoint.clone(), &settings.api_key_env)
                .map_err(|e| PipelineError::new(stage, e))?;
            Provider::new(Box::new(backend), &config).map_err(|e| PipelineError::new(stage, e))
        }
    }
}

fn resolve_hard_list(config: &PipelineConfig) -> Result<HardConstraintList, PipelineError> {
    match &config.hard_constraints_path {
        Some(path) => {
            HardConstraintList::from_file(path).map_err(|e| PipelineError::new("build", e))
        }
        None => Ok(HardConstraintList::default()),
    }
}

/// Loads, filters, dedupes, and caps the seeds, then writes
/// `output_dir/seeds.jsonl`.
pub fn stage_seeds(config: &PipelineConfig) -> Result<Vec<SeedInstruction>, PipelineError> {
    let stage = "seeds";
    if config.seeds_path.as_os_str().is_empty() {
        return Err(PipelineError::new(stage, "seeds_path is not set"));
    }
    let filters = config.seed_filters.to_filters();
    let loaded =
        load_seeds(&config.seeds_path, &filters).map_err(|e| PipelineError::new(stage, e))?;
    let mut seeds = dedupe(loaded);
    seeds.truncate(config.max_seeds);
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| PipelineError::new(stage, format!("cannot create output dir: {e}")))?;
    jsonl::write(config.output_dir.join("seeds.jsonl"), &seeds)
        .map_err(|e| PipelineError::new(stage, e))?;
    Ok(seeds)
}

/// Everything one chain produced, kept together so the combined run can
/// pipeline build and judge per chain.
struct ChainBundle {
    chain: InstructionChain,
    pairs: Vec<PreferencePair>,
    records: Vec<ComparisonRecord>,
}

/// Per-seed failure, reported as a warning rather than aborting the batch.
struct ChainSkip {
    seed_id: String,
    message: String,
}

type ChainResults = Vec<Result<ChainBundle, ChainSkip>>;
type JudgeOutcome = (Vec<PreferencePair>, Vec<ComparisonRecord>);

fn process_chain(
    seed: &SeedInstruction,
    config: &PipelineConfig,
    hard_list: &HardConstraintList,
    provider: &Provider,
    judge: bool,
) -> Result<ChainBundle, ChainSkip> {
    let synthesizer = Synthesizer::new(&config.category_policy, hard_list, &config.generation);
    let mut synth_rng = derive_rng(config.rng_seed, RNG_DOMAIN_SYNTH, &seed.id);
    let chain = build_chain(
        seed,
        config.n_constraints,
        &synthesizer,
        provider,
        &mut synth_rng,
    )
    .map_err(|e| ChainSkip {
        seed_id: seed.id.clone(),
        message: e.to_string(),
    })?;

    let (pairs, records) = if judge {
        let mut judge_rng = derive_rng(config.rng_seed, RNG_DOMAIN_JUDGE, &seed.id);
        let result = reorder_chain(
            &chain,
            config.judger_mode,
            provider,
            &config.generation,
            &mut judge_rng,
        )
        .map_err(|e| ChainSkip {
            seed_id: seed.id.clone(),
            message: e.to_string(),
        })?;
        (result.pairs, result.records)
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(ChainBundle {
        chain,
        pairs,
        records,
    })
}

fn run_parallel<T, F>(concurrency: usize, items: &[T], f: F) -> Result<ChainResults, PipelineError>
where
    T: Sync,
    F: Fn(&T) -> Result<ChainBundle, ChainSkip> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency)
        .build()
        .map_err(|e| PipelineError::new("build", format!("worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// Builds chains for all seeds in parallel and writes
/// `output_dir/chains.jsonl`. Failed chains are skipped with a warning.
pub fn stage_build(
    config: &PipelineConfig,
    seeds: &[SeedInstruction],
    provider: &Provider,
) -> Result<(Vec<InstructionChain>, Vec<String>), PipelineError> {
    let stage = "build";
    let hard_list = resolve_hard_list(config)?;
    let results = run_parallel(config.batch_concurrency, seeds, |seed| {
        process_chain(seed, config, &hard_list, provider, false)
    })?;

    let mut chains = Vec::new();
    let mut warnings = Vec::new();
    for result in results {
        match result {
            Ok(bundle) => chains.push(bundle.chain),
            Err(skip) => {
                log::warn!("skipping chain for seed {}: {}", skip.seed_id, skip.message);
                warnings.push(format!("chain {} skipped: {}", skip.seed_id, skip.message));
            }
        }
    }
    jsonl::write(config.output_dir.join("chains.jsonl"), &chains)
        .map_err(|e| PipelineError::new(stage, e))?;
    Ok((chains, warnings))
}

/// Pairs, audit records, and warnings produced by the judge stage.
pub type JudgeStageOutput = (Vec<PreferencePair>, Vec<ComparisonRecord>, Vec<String>);

/// Runs the tournament over every chain and writes `pairs.jsonl` and
/// `records.jsonl`.
pub fn stage_judge(
    config: &PipelineConfig,
    chains: &[InstructionChain],
    provider: &Provider,
) -> Result<JudgeStageOutput, PipelineError> {
    let stage = "judge";
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.batch_concurrency)
        .build()
        .map_err(|e| PipelineError::new(stage, format!("worker pool: {e}")))?;
    let results: Vec<Result<JudgeOutcome, ChainSkip>> = pool.install(|| {
        chains
            .par_iter()
            .map(|chain| {
                let mut judge_rng = derive_rng(config.rng_seed, RNG_DOMAIN_JUDGE, &chain.seed_id);
                reorder_chain(
                    chain,
                    config.judger_mode,
                    provider,
                    &config.generation,
                    &mut judge_rng,
                )
                .map(|r| (r.pairs, r.records))
                .map_err(|e| ChainSkip {
                    seed_id: chain.seed_id.clone(),
                    message: e.to_string(),
                })
            })
            .collect()
    });

    let mut pairs = Vec::new();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for result in results {
        match result {
            Ok((p, r)) => {
                pairs.extend(p);
                records.extend(r);
            }
            Err(skip) => {
                log::warn!(
                    "tournament for seed {} failed: {}",
                    skip.seed_id,
                    skip.message
                );
                warnings.push(format!(
                    "tournament {} skipped: {}",
                    skip.seed_id, skip.message
                ));
            }
        }
    }
    write_pairs_and_records(config, &pairs, &records)?;
    Ok((pairs, records, warnings))
}

fn write_pairs_and_records(
    config: &PipelineConfig,
    pairs: &[PreferencePair],
    records: &[ComparisonRecord],
) -> Result<(), PipelineError> {
    jsonl::write(config.output_dir.join("pairs.jsonl"), pairs)
        .map_err(|e| PipelineError::new("judge", e))?;
    jsonl::write(config.output_dir.join("records.jsonl"), records)
        .map_err(|e| PipelineError::new("judge", e))?;
    Ok(())
}

/// Bins pairs into stages, mixes replay, emits stage files and the manifest.
pub fn stage_assemble(
    config: &PipelineConfig,
    pairs: &[PreferencePair],
) -> Result<(TrainingManifest, Vec<String>), PipelineError> {
    let stage = "assemble";
    let outcome = bin_by_constraint_count(pairs, &config.merge_plan)
        .map_err(|e| PipelineError::new(stage, e))?;
    let mut warnings = outcome.warnings;
    let mut stages = outcome.stages;

    if let Some(replay_path) = &config.replay_path {
        let pool = ReplayPool::from_file(replay_path).map_err(|e| PipelineError::new(stage, e))?;
        if pool.is_empty() {
            return Err(PipelineError::new(
                stage,
                format!("replay pool {} is empty", replay_path.display()),
            ));
        }
        let sizes: Vec<usize> = stages.iter().map(|s| s.dpo_triplets.len()).collect();
        let total: usize = sizes.iter().sum();
        if total == 0 && config.replay_budget > 0 {
            warnings.push("no preference pairs; replay mixing skipped".to_string());
        } else if config.replay_budget > 0 {
            let counts: Vec<usize> = if config.replay_budget_per_stage {
                let per_stage = config.replay_budget.min(pool.len());
                if per_stage < config.replay_budget {
                    warnings.push(format!(
                        "replay budget {} exceeds pool size {}; clamped",
                        config.replay_budget,
                        pool.len()
                    ));
                }
                vec![per_stage; stages.len()]
            } else {
                let budget = config.replay_budget.min(pool.len());
                if budget < config.replay_budget {
                    warnings.push(format!(
                        "replay budget {} exceeds pool size {}; clamped to {}",
                        config.replay_budget,
                        pool.len(),
                        budget
                    ));
                }
                allocate_replay(&sizes, budget).map_err(|e| PipelineError::new(stage, e))?
            };
            let mut mixed = Vec::with_capacity(stages.len());
            for (stage_data, count) in stages.into_iter().zip(counts) {
                let mut rng = derive_rng(config.rng_seed, RNG_DOMAIN_REPLAY, &stage_data.stage_id);
                let stage_data = mix_replay(stage_data, &pool, count, &mut rng)
                    .map_err(|e| PipelineError::new(stage, e))?;
                mixed.push(stage_data);
            }
            stages = mixed;
        }
    }

    let mut descriptors: Vec<StageDescriptor> = Vec::with_capacity(stages.len());
    for stage_data in &stages {
        let dirname = stage_dirname(&stage_data.stage_id);
        descriptors.push(
            emit_stage_files(stage_data, &config.output_dir, &dirname)
                .map_err(|e| PipelineError::new(stage, e))?,
        );
    }
    let manifest = emit_training_manifest(
        &descriptors,
        config.replay_budget,
        &config.hyperparams,
        config.output_dir.join("training_manifest.json"),
    )
    .map_err(|e| PipelineError::new(stage, e))?;
    Ok((manifest, warnings))
}

fn manifest_stage_label(descriptor: &StageDescriptor) -> String {
    if descriptor.k_min == descriptor.k_max {
        descriptor.k_min.to_string()
    } else {
        format!("{}-{}", descriptor.k_min, descriptor.k_max)
    }
}

/// Emits `reports/stats.{json,txt}` from the manifest's stage files.
pub fn stage_stats(config: &PipelineConfig) -> Result<analytics::StatsReport, PipelineError> {
    let stage = "stats";
    let manifest = load_manifest(config.output_dir.join("training_manifest.json"))
        .map_err(|e| PipelineError::new(stage, e))?;
    let inputs: Vec<StageFiles> = manifest
        .stages
        .iter()
        .map(|d| StageFiles {
            label: manifest_stage_label(d),
            dpo_path: config.output_dir.join(&d.dpo_path),
        })
        .collect();
    let report = analytics::dataset_stats(&inputs).map_err(|e| PipelineError::new(stage, e))?;

    let reports_dir = config.output_dir.join("reports");
    std::fs::create_dir_all(&reports_dir)
        .map_err(|e| PipelineError::new(stage, format!("cannot create reports dir: {e}")))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(reports_dir.join("stats.json"), json + "\n")
        .map_err(|e| PipelineError::new(stage, e))?;
    std::fs::write(reports_dir.join("stats.txt"), report.to_text())
        .map_err(|e| PipelineError::new(stage, e))?;
    Ok(report)
}

/// Emits `reports/verbs.{json,txt}` over all stage instructions.
pub fn stage_verbs(
    config: &PipelineConfig,
    top_n: usize,
    lexicon: &VerbLexicon,
) -> Result<Vec<analytics::VerbCount>, PipelineError> {
    let stage = "verbs";
    let manifest = load_manifest(config.output_dir.join("training_manifest.json"))
        .map_err(|e| PipelineError::new(stage, e))?;
    let mut instructions: Vec<String> = Vec::new();
    for descriptor in &manifest.stages {
        let rows: Vec<crate::curriculum::DpoRow> =
            jsonl::read(config.output_dir.join(&descriptor.dpo_path))
                .map_err(|e| PipelineError::new(stage, e))?;
        instructions.extend(rows.into_iter().map(|r| r.instruction));
    }
    let histogram = analytics::verb_frequency(&instructions, top_n, lexicon);

    let reports_dir = config.output_dir.join("reports");
    std::fs::create_dir_all(&reports_dir)
        .map_err(|e| PipelineError::new(stage, format!("cannot create reports dir: {e}")))?;
    let json = serde_json::to_string_pretty(&histogram).expect("histogram serializes");
    std::fs::write(reports_dir.join("verbs.json"), json + "\n")
        .map_err(|e| PipelineError::new(stage, e))?;
    std::fs::write(
        reports_dir.join("verbs.txt"),
        analytics::verbs_to_text(&histogram),
    )
    .map_err(|e| PipelineError::new(stage, e))?;
    Ok(histogram)
}

/// Per-stage counts surfaced in the run summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage_id: String,
    pub k_min: usize,
    pub k_max: usize,
    pub dpo: usize,
    pub sft: usize,
    pub replay: usize,
}

/// End-of-run accounting, written as `run_summary.json`. Contains no
/// timestamps: summaries of identical runs must be byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub seeds_used: usize,
    pub chains_built: usize,
    pub chains_failed: usize,
    pub pairs: usize,
    pub records: usize,
    pub stages: Vec<StageSummary>,
    pub warnings: Vec<String>,
}

/// The combined pipeline: seeds through reports, pipelining build and judge
/// per chain so a chain's tournament starts as soon as the chain is done.
pub fn run_all(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    config
        .validate()
        .map_err(|e| PipelineError::new("config", e))?;
    let provider = build_provider(&config.provider)?;
    let hard_list = resolve_hard_list(config)?;

    let seeds = stage_seeds(config)?;
    let results = run_parallel(config.batch_concurrency, &seeds, |seed| {
        process_chain(seed, config, &hard_list, &provider, true)
    })?;

    let mut chains = Vec::new();
    let mut pairs = Vec::new();
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut chains_failed = 0usize;
    for result in results {
        match result {
            Ok(bundle) => {
                chains.push(bundle.chain);
                pairs.extend(bundle.pairs);
                records.extend(bundle.records);
            }
            Err(skip) => {
                chains_failed += 1;
                log::warn!("skipping seed {}: {}", skip.seed_id, skip.message);
                warnings.push(format!("chain {} skipped: {}", skip.seed_id, skip.message));
            }
        }
    }

    jsonl::write(config.output_dir.join("chains.jsonl"), &chains)
        .map_err(|e| PipelineError::new("build", e))?;
    write_pairs_and_records(config, &pairs, &records)?;

    if pairs.is_empty() {
        warnings.push("no preference pairs were produced".to_string());
    }

    let (manifest, assemble_warnings) = stage_assemble(config, &pairs)?;
    warnings.extend(assemble_warnings);
    stage_stats(config)?;
    stage_verbs(config, 20, &VerbLexicon::default())?;

    let summary = RunSummary {
        seeds_used: seeds.len(),
        chains_built: chains.len(),
        chains_failed,
        pairs: pairs.len(),
        records: records.len(),
        stages: manifest
            .stages
            .iter()
            .map(|d| StageSummary {
                stage_id: d.stage_id.clone(),
                k_min: d.k_min,
                k_max: d.k_max,
                dpo: d.dpo_count,
                sft: d.sft_count,
                replay: d.replay_count,
            })
            .collect(),
        warnings,
    };
    let body = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(config.output_dir.join("run_summary.json"), body + "\n")
        .map_err(|e| PipelineError::new("summary", e))?;
    Ok(summary)
}

/// Writes the machine-readable failure report next to the artifacts that
/// did get produced.
pub fn write_error_report(output_dir: &Path, error: &PipelineError) {
    let _ = std::fs::create_dir_all(output_dir);
    let body = serde_json::to_string_pretty(error).expect("error serializes");
    let _ = std::fs::write(output_dir.join("error_report.json"), body + "\n");
}
