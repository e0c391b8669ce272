//! Shared fixtures: scripted end-to-end mock tables and artifact-tree
//! helpers. Each test binary uses a different subset.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use constraint_forge::config::{PipelineConfig, ProviderKind};
use constraint_forge::judger::{build_judger_prompt, JudgeMode};
use constraint_forge::pipeline::{derive_rng, RNG_DOMAIN_SYNTH};
use constraint_forge::seeds::{SeedInstruction, SeedMeta, SeedSource};
use constraint_forge::synthesis::{
    apply_hard_constraint, build_rewrite_prompt, sample_category, select_hard_constraint,
    CategoryDraw, HardConstraintList,
};

/// Intended judge outcome for one tournament step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intended {
    Challenger,
    Incumbent,
    Tie,
}

/// Default verdict pattern for golden fixtures: challenger, incumbent, tie,
/// repeating by k.
pub fn default_intended(_seed_id: &str, k: usize) -> Intended {
    match k % 3 {
        1 => Intended::Challenger,
        2 => Intended::Incumbent,
        _ => Intended::Tie,
    }
}

pub fn fixture_seeds(count: usize) -> Vec<SeedInstruction> {
    let topics = [
        "Write a short story about a lighthouse keeper",
        "Explain how photosynthesis works",
        "List three ways to improve a resume",
        "Describe the water cycle for a child",
        "Summarize the plot of a mystery novel",
    ];
    (0..count)
        .map(|i| SeedInstruction {
            id: format!("seed-{}", i + 1),
            source: SeedSource::Other,
            text: topics[i % topics.len()].to_string(),
            meta: SeedMeta::default(),
        })
        .collect()
}

/// Builds an exhaustive mock script for a full pipeline run by replaying the
/// deterministic per-chain draws through the public synthesis API. Soft
/// rewrites reply with JSON that appends a marker phrase; generations are
/// keyed by instruction text; judge queries are scripted for both
/// presentation orders according to `intended`.
pub fn script_pipeline(
    seeds: &[SeedInstruction],
    config: &PipelineConfig,
    hard: &HardConstraintList,
    intended: impl Fn(&str, usize) -> Intended,
) -> HashMap<String, String> {
    assert_eq!(
        config.judger_mode,
        JudgeMode::BothOrders,
        "fixture scripting supports both_orders only"
    );
    let mut table = HashMap::new();
    for seed in seeds {
        let mut synth_rng = derive_rng(config.rng_seed, RNG_DOMAIN_SYNTH, &seed.id);
        let mut current = seed.text.clone();
        let seed_output = format!("response for {} with zero constraints", seed.id);
        table.insert(seed.text.clone(), seed_output.clone());

        let mut outputs = vec![seed_output];
        let mut instructions = Vec::new();
        let mut used = HashSet::new();
        let mut history = Vec::new();

        for k in 1..=config.n_constraints {
            let draw = sample_category(&mut synth_rng, &config.category_policy, &history)
                .expect("valid policy");
            let modified = match draw {
                CategoryDraw::Hard => {
                    let (_, description) = select_hard_constraint(hard, &mut synth_rng, &mut used)
                        .expect("hard list large enough");
                    apply_hard_constraint(&current, description)
                }
                CategoryDraw::Soft(_) => {
                    let request = build_rewrite_prompt(&current, &draw, &config.generation)
                        .expect("soft draw");
                    let added = format!("obey rule {k} for {}", seed.id);
                    let modified = format!("{current} {added}");
                    let reply = serde_json::json!({
                        "modified_instruction": modified,
                        "added_constraint": added,
                    });
                    table.insert(request.user_text, reply.to_string());
                    modified
                }
            };
            history.push(draw);
            let output = format!("response for {} at step {k}", seed.id);
            table.insert(modified.clone(), output.clone());
            outputs.push(output);
            instructions.push(modified.clone());
            current = modified;
        }

        let mut incumbent = outputs[0].clone();
        for k in 1..=config.n_constraints {
            let challenger = outputs[k].clone();
            let instruction = &instructions[k - 1];
            let outcome = intended(&seed.id, k);
            let (incumbent_first_reply, challenger_first_reply) = match outcome {
                Intended::Challenger => ("[[B]]", "[[A]]"),
                Intended::Incumbent => ("[[A]]", "[[B]]"),
                Intended::Tie => ("[[C]]", "[[C]]"),
            };
            let q1 = build_judger_prompt(instruction, &incumbent, &challenger, &config.generation)
                .expect("prompt");
            let q2 = build_judger_prompt(instruction, &challenger, &incumbent, &config.generation)
                .expect("prompt");
            table.insert(q1.user_text, incumbent_first_reply.to_string());
            table.insert(q2.user_text, challenger_first_reply.to_string());
            if outcome != Intended::Incumbent {
                incumbent = challenger;
            }
        }
    }
    table
}

/// A ready-to-run fixture: inputs on disk plus the resolved config.
pub struct Fixture {
    pub config: PipelineConfig,
}

/// Writes seeds, a replay pool, and the scripted mock table under
/// `input_dir`, returning a config that runs fully offline.
pub fn golden_fixture(
    input_dir: &Path,
    output_dir: &Path,
    seed_count: usize,
    rng_seed: u64,
    intended: impl Fn(&str, usize) -> Intended,
) -> Fixture {
    let seeds = fixture_seeds(seed_count);
    let seeds_path = input_dir.join("seeds.jsonl");
    let seed_lines: Vec<String> = seeds
        .iter()
        .map(|s| serde_json::to_string(s).unwrap())
        .collect();
    std::fs::write(&seeds_path, seed_lines.join("\n") + "\n").unwrap();

    let replay_path = input_dir.join("conversations.jsonl");
    let replay_lines: Vec<String> = (0..10)
        .map(|i| {
            serde_json::json!({
                "instruction": format!("small talk prompt {i}"),
                "response": format!("small talk reply {i}"),
            })
            .to_string()
        })
        .collect();
    std::fs::write(&replay_path, replay_lines.join("\n") + "\n").unwrap();

    let mut config = PipelineConfig {
        seeds_path,
        output_dir: output_dir.to_path_buf(),
        rng_seed,
        replay_path: Some(replay_path),
        replay_budget: 6,
        ..PipelineConfig::default()
    };
    config.provider.kind = ProviderKind::Mock;

    let hard = HardConstraintList::default();
    let table = script_pipeline(&seeds, &config, &hard, intended);
    let script_path = input_dir.join("mock_script.json");
    let script = serde_json::json!({ "entries": table });
    std::fs::write(&script_path, serde_json::to_string_pretty(&script).unwrap()).unwrap();
    config.provider.mock_script = Some(script_path);

    Fixture { config }
}

/// Relative path → file bytes for every regular file under `dir`.
pub fn snapshot_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut snapshot = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                snapshot.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    snapshot
}

pub fn copy_tree(src: &Path, dst: &Path) {
    for (rel, bytes) in snapshot_tree(src) {
        let target = dst.join(&rel);
        std::fs::create_dir_all(target.parent().unwrap()).unwrap();
        std::fs::write(target, bytes).unwrap();
    }
}

/// Rewrites one line of a JSONL file in place via `edit`.
pub fn edit_jsonl_line(path: &Path, line_index: usize, edit: impl Fn(&mut serde_json::Value)) {
    let body = std::fs::read_to_string(path).unwrap();
    let mut lines: Vec<String> = body.lines().map(str::to_string).collect();
    let mut value: serde_json::Value = serde_json::from_str(&lines[line_index]).unwrap();
    edit(&mut value);
    lines[line_index] = serde_json::to_string(&value).unwrap();
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

pub fn first_stage_dir(output_dir: &Path) -> PathBuf {
    let manifest =
        constraint_forge::curriculum::load_manifest(output_dir.join("training_manifest.json"))
            .unwrap();
    output_dir.join(&manifest.stages[0].dir)
}
