//! Artifact-tree validation: schema checks on every JSONL artifact plus the
//! cross-file invariants (partition, audit completeness, SFT projection,
//! replay accounting, stage ordering).
//!
//! The validator is lenient about which files exist (it checks what it
//! finds, and cross-checks only when both sides are present) but strict
//! about content. Every violation names its file and line.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builder::InstructionChain;
use crate::curriculum::{DpoRow, SftPair, TrainingManifest};
use crate::jsonl;
use crate::judger::{
    ComparisonOutcome, ComparisonRecord, JudgeQuery, PreferencePair, PresentedOrder, Verdict,
};
use crate::seeds::SeedInstruction;

/// One validation finding. `line` of 0 means the violation concerns the
/// whole file (or a cross-file relationship).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub file: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "{}:{}: {}", self.file, self.line, self.message)
        } else {
            write!(f, "{}: {}", self.file, self.message)
        }
    }
}

struct Reporter {
    violations: Vec<Violation>,
}

impl Reporter {
    fn new() -> Self {
        Self {
            violations: Vec::new(),
        }
    }

    fn add(&mut self, file: &str, line: usize, message: impl ToString) {
        self.violations.push(Violation {
            file: file.to_string(),
            line,
            message: message.to_string(),
        });
    }
}

fn rel(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).display().to_string()
}

/// Reads a JSONL artifact leniently, converting malformed lines into
/// violations instead of aborting.
fn read_artifact<T: serde::de::DeserializeOwned>(
    dir: &Path,
    name: &str,
    reporter: &mut Reporter,
) -> Option<Vec<T>> {
    let path = dir.join(name);
    if !path.exists() {
        return None;
    }
    match jsonl::read_lossy::<T>(&path) {
        Ok((records, line_errors)) => {
            for err in line_errors {
                reporter.add(
                    name,
                    err.line,
                    format!("malformed JSON line: {}", err.message),
                );
            }
            Some(records)
        }
        Err(e) => {
            reporter.add(name, 0, e);
            None
        }
    }
}

/// Validates the artifact tree under `dir` and returns every violation
/// found. An empty result means the tree passes.
pub fn validate_tree(dir: &Path) -> Vec<Violation> {
    let mut reporter = Reporter::new();

    if let Some(seeds) = read_artifact::<SeedInstruction>(dir, "seeds.jsonl", &mut reporter) {
        check_seeds(&seeds, &mut reporter);
    }
    if let Some(chains) = read_artifact::<InstructionChain>(dir, "chains.jsonl", &mut reporter) {
        check_chains(&chains, &mut reporter);
    }

    let pairs = read_artifact::<PreferencePair>(dir, "pairs.jsonl", &mut reporter);
    let records = read_artifact::<ComparisonRecord>(dir, "records.jsonl", &mut reporter);
    if let Some(pairs) = &pairs {
        check_pairs(pairs, records.as_deref(), &mut reporter);
    }
    if let Some(records) = &records {
        check_records(records, &mut reporter);
    }

    let manifest_path = dir.join("training_manifest.json");
    if manifest_path.exists() {
        match crate::curriculum::load_manifest(&manifest_path) {
            Ok(manifest) => check_manifest(dir, &manifest, pairs.as_deref(), &mut reporter),
            Err(e) => reporter.add("training_manifest.json", 0, e),
        }
    }

    reporter.violations
}

fn check_seeds(seeds: &[SeedInstruction], reporter: &mut Reporter) {
    let mut ids = HashSet::new();
    for (idx, seed) in seeds.iter().enumerate() {
        let line = idx + 1;
        if seed.id.trim().is_empty() {
            reporter.add("seeds.jsonl", line, "seed has an empty id");
        }
        if seed.text.trim().is_empty() {
            reporter.add("seeds.jsonl", line, "seed has an empty text");
        }
        if !ids.insert(seed.id.clone()) {
            reporter.add(
                "seeds.jsonl",
                line,
                format!("duplicate seed id {:?}", seed.id),
            );
        }
    }
}

fn check_chains(chains: &[InstructionChain], reporter: &mut Reporter) {
    for (idx, chain) in chains.iter().enumerate() {
        let line = idx + 1;
        if chain.steps.len() != chain.n {
            reporter.add(
                "chains.jsonl",
                line,
                format!(
                    "chain {} has {} steps but n={}",
                    chain.seed_id,
                    chain.steps.len(),
                    chain.n
                ),
            );
        }
        let mut previous = chain.seed_text.as_str();
        for (step_idx, step) in chain.steps.iter().enumerate() {
            if step.k != step_idx + 1 {
                reporter.add(
                    "chains.jsonl",
                    line,
                    format!(
                        "chain {} step {} has k={} (gap or out of order)",
                        chain.seed_id,
                        step_idx + 1,
                        step.k
                    ),
                );
            }
            if step.instruction.trim().is_empty() {
                reporter.add(
                    "chains.jsonl",
                    line,
                    format!(
                        "chain {} step {} has an empty instruction",
                        chain.seed_id, step.k
                    ),
                );
            }
            if step.instruction == previous {
                reporter.add(
                    "chains.jsonl",
                    line,
                    format!(
                        "chain {} step {} does not modify the previous instruction",
                        chain.seed_id, step.k
                    ),
                );
            }
            previous = step.instruction.as_str();
        }
    }
}

fn check_pairs(
    pairs: &[PreferencePair],
    records: Option<&[ComparisonRecord]>,
    reporter: &mut Reporter,
) {
    let record_index: Option<HashMap<&str, &ComparisonRecord>> =
        records.map(|records| records.iter().map(|r| (r.record_id.as_str(), r)).collect());

    let mut seen_ks: HashSet<(String, usize)> = HashSet::new();
    for (idx, pair) in pairs.iter().enumerate() {
        let line = idx + 1;
        if pair.instruction.trim().is_empty() {
            reporter.add("pairs.jsonl", line, "empty instruction");
        }
        if pair.k < 1 {
            reporter.add("pairs.jsonl", line, format!("k={} is below 1", pair.k));
        }
        if pair.chosen == pair.rejected {
            reporter.add("pairs.jsonl", line, "chosen equals rejected");
        }
        if !seen_ks.insert((pair.seed_id.clone(), pair.k)) {
            reporter.add(
                "pairs.jsonl",
                line,
                format!("duplicate k={} for seed {}", pair.k, pair.seed_id),
            );
        }
        if pair.record_ref.trim().is_empty() {
            reporter.add("pairs.jsonl", line, "missing record_ref");
        } else if let Some(index) = &record_index {
            match index.get(pair.record_ref.as_str()) {
                None => {
                    reporter.add(
                        "pairs.jsonl",
                        line,
                        format!(
                            "record_ref {:?} not found in records.jsonl",
                            pair.record_ref
                        ),
                    );
                }
                Some(record) => {
                    let orientation_ok = match record.final_outcome {
                        ComparisonOutcome::IncumbentWins => {
                            pair.chosen == record.incumbent && pair.rejected == record.challenger
                        }
                        ComparisonOutcome::ChallengerWins => {
                            pair.chosen == record.challenger && pair.rejected == record.incumbent
                        }
                        ComparisonOutcome::Tie => false,
                    };
                    if !orientation_ok {
                        reporter.add(
                            "pairs.jsonl",
                            line,
                            format!(
                                "pair orientation disagrees with record {:?}",
                                pair.record_ref
                            ),
                        );
                    }
                }
            }
        }
    }
}

/// What the last query of one presentation order named, unwound to the
/// underlying output.
fn named_winner(queries: &[&JudgeQuery]) -> Option<ComparisonOutcome> {
    let last = queries.last()?;
    let verdict = last.verdict?;
    Some(match (last.presented_order, verdict) {
        (_, Verdict::Tie) => ComparisonOutcome::Tie,
        (PresentedOrder::IncumbentFirst, Verdict::Left) => ComparisonOutcome::IncumbentWins,
        (PresentedOrder::IncumbentFirst, Verdict::Right) => ComparisonOutcome::ChallengerWins,
        (PresentedOrder::ChallengerFirst, Verdict::Left) => ComparisonOutcome::ChallengerWins,
        (PresentedOrder::ChallengerFirst, Verdict::Right) => ComparisonOutcome::IncumbentWins,
    })
}

fn check_records(records: &[ComparisonRecord], reporter: &mut Reporter) {
    let mut seen_ids = HashSet::new();
    for (idx, record) in records.iter().enumerate() {
        let line = idx + 1;
        if record.queries.is_empty() {
            reporter.add(
                "records.jsonl",
                line,
                format!("record {} has no queries", record.record_id),
            );
            continue;
        }
        if !seen_ids.insert(record.record_id.clone()) {
            reporter.add(
                "records.jsonl",
                line,
                format!("duplicate record_id {:?}", record.record_id),
            );
        }

        // Recompute the final outcome from the recorded queries: the last
        // query per presentation order is decisive; two orders must agree
        // on a winner, anything else is a tie.
        let incumbent_first: Vec<&JudgeQuery> = record
            .queries
            .iter()
            .filter(|q| q.presented_order == PresentedOrder::IncumbentFirst)
            .collect();
        let challenger_first: Vec<&JudgeQuery> = record
            .queries
            .iter()
            .filter(|q| q.presented_order == PresentedOrder::ChallengerFirst)
            .collect();
        let expected = match (incumbent_first.is_empty(), challenger_first.is_empty()) {
            (false, false) => {
                let first = named_winner(&incumbent_first).unwrap_or(ComparisonOutcome::Tie);
                let second = named_winner(&challenger_first).unwrap_or(ComparisonOutcome::Tie);
                if first == second && first != ComparisonOutcome::Tie {
                    first
                } else {
                    ComparisonOutcome::Tie
                }
            }
            (false, true) => named_winner(&incumbent_first).unwrap_or(ComparisonOutcome::Tie),
            (true, false) => named_winner(&challenger_first).unwrap_or(ComparisonOutcome::Tie),
            (true, true) => unreachable!("queries checked non-empty"),
        };
        if expected != record.final_outcome {
            reporter.add(
                "records.jsonl",
                line,
                format!(
                    "record {} final outcome {:?} disagrees with its queries (expected {:?})",
                    record.record_id, record.final_outcome, expected
                ),
            );
        }
    }
}

fn check_manifest(
    dir: &Path,
    manifest: &TrainingManifest,
    pairs: Option<&[PreferencePair]>,
    reporter: &mut Reporter,
) {
    let manifest_file = "training_manifest.json";
    for window in manifest.stages.windows(2) {
        if window[0].k_max > window[1].k_max {
            reporter.add(
                manifest_file,
                0,
                format!(
                    "stages {} and {} are not sorted by ascending k_max",
                    window[0].stage_id, window[1].stage_id
                ),
            );
        }
    }

    let replay_total: usize = manifest.stages.iter().map(|d| d.replay_count).sum();
    if !manifest.stages.is_empty() && replay_total > manifest.replay_budget {
        reporter.add(
            manifest_file,
            0,
            format!(
                "total replay count {} exceeds budget {}",
                replay_total, manifest.replay_budget
            ),
        );
    }

    let mut total_dpo_rows = 0usize;
    for descriptor in &manifest.stages {
        let dpo_path = dir.join(&descriptor.dpo_path);
        let sft_path = dir.join(&descriptor.sft_path);
        let dpo_name = rel(dir, &dpo_path);
        let sft_name = rel(dir, &sft_path);

        if !dpo_path.exists() {
            reporter.add(
                manifest_file,
                0,
                format!("stage file {dpo_name} is missing"),
            );
            continue;
        }
        if !sft_path.exists() {
            reporter.add(
                manifest_file,
                0,
                format!("stage file {sft_name} is missing"),
            );
            continue;
        }

        let (dpo_rows, dpo_errors) = match jsonl::read_lossy::<DpoRow>(dpo_path) {
            Ok(result) => result,
            Err(e) => {
                reporter.add(&dpo_name, 0, e);
                continue;
            }
        };
        for err in dpo_errors {
            reporter.add(
                &dpo_name,
                err.line,
                format!("malformed JSON line: {}", err.message),
            );
        }
        let (sft_rows, sft_errors) = match jsonl::read_lossy::<SftPair>(sft_path) {
            Ok(result) => result,
            Err(e) => {
                reporter.add(&sft_name, 0, e);
                continue;
            }
        };
        for err in sft_errors {
            reporter.add(
                &sft_name,
                err.line,
                format!("malformed JSON line: {}", err.message),
            );
        }

        total_dpo_rows += dpo_rows.len();

        for (idx, row) in dpo_rows.iter().enumerate() {
            let line = idx + 1;
            if row.instruction.trim().is_empty() {
                reporter.add(&dpo_name, line, "empty instruction");
            }
            if row.chosen == row.rejected {
                reporter.add(&dpo_name, line, "chosen equals rejected");
            }
            if !descriptor.k_values.contains(&row.k) {
                reporter.add(
                    &dpo_name,
                    line,
                    format!(
                        "k={} outside stage {} range {:?}",
                        row.k, descriptor.stage_id, descriptor.k_values
                    ),
                );
            }
        }

        if dpo_rows.len() != descriptor.dpo_count {
            reporter.add(
                &dpo_name,
                0,
                format!(
                    "stage {} manifest says {} dpo rows but file has {}",
                    descriptor.stage_id,
                    descriptor.dpo_count,
                    dpo_rows.len()
                ),
            );
        }
        if sft_rows.len() != descriptor.sft_count {
            reporter.add(
                &sft_name,
                0,
                format!(
                    "stage {} manifest says {} sft rows but file has {}",
                    descriptor.stage_id,
                    descriptor.sft_count,
                    sft_rows.len()
                ),
            );
        }

        let replay_rows = sft_rows.iter().filter(|r| r.is_replay).count();
        if replay_rows != descriptor.replay_count {
            reporter.add(
                &sft_name,
                0,
                format!(
                    "stage {} manifest says {} replay rows but file has {}",
                    descriptor.stage_id, descriptor.replay_count, replay_rows
                ),
            );
        }

        // SFT projection: non-replay rows must be exactly the
        // (instruction, chosen) projections of the dpo rows, in order.
        let projected: Vec<(&str, &str)> = dpo_rows
            .iter()
            .map(|r| (r.instruction.as_str(), r.chosen.as_str()))
            .collect();
        let non_replay: Vec<(&str, &str)> = sft_rows
            .iter()
            .filter(|r| !r.is_replay)
            .map(|r| (r.instruction.as_str(), r.response.as_str()))
            .collect();
        if projected != non_replay {
            reporter.add(
                &sft_name,
                0,
                format!(
                    "stage {} sft rows do not project its dpo triplets",
                    descriptor.stage_id
                ),
            );
        }

        for (idx, row) in sft_rows.iter().enumerate() {
            if row.instruction.trim().is_empty() {
                reporter.add(&sft_name, idx + 1, "empty instruction");
            }
        }
    }

    // Partition: stage files together hold exactly the pairs that were binned.
    if let Some(pairs) = pairs {
        if total_dpo_rows != pairs.len() {
            reporter.add(
                manifest_file,
                0,
                format!(
                    "stage dpo rows total {} but pairs.jsonl has {}",
                    total_dpo_rows,
                    pairs.len()
                ),
            );
        }
    }
}
