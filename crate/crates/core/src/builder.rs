//! Progressive chain construction: one constraint per step, one generated
//! output per instruction.
//!
//! A chain starts from a seed instruction and grows through steps 1..n.
//! Step k rewrites step k-1's instruction (step 1 rewrites the seed) by
//! adding exactly one constraint, then generates an output for the new
//! instruction. An output is also generated for the bare seed: the judge
//! tournament needs an initial incumbent to compare step 1 against.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::{ChatRequest, Provider, ProviderError};
use crate::seeds::SeedInstruction;
use crate::synthesis::{
    self, apply_hard_constraint, build_rewrite_prompt, parse_rewrite, select_hard_constraint,
    validate_rewrite, CategoryDraw, CategoryKind, CategoryPolicy, GenParams, HardConstraintList,
    RewriteResult, SynthesisError,
};

/// One constraint-addition step of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub k: usize,
    pub category: CategoryKind,
    /// Soft subtype name, or the hard-list index rendered as decimal.
    pub subtype: String,
    pub constraint: String,
    pub instruction: String,
    pub output: String,
    pub warnings: Vec<String>,
}

/// A completed chain: seed, seed output, and n constraint steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionChain {
    pub seed_id: String,
    pub seed_text: String,
    pub seed_output: String,
    pub n: usize,
    pub steps: Vec<ChainStep>,
}

/// Everything constraint synthesis needs, bundled for [`build_chain`].
pub struct Synthesizer<'a> {
    pub policy: &'a CategoryPolicy,
    pub hard_list: &'a HardConstraintList,
    pub params: &'a GenParams,
    /// Extra attempts when the rewrite response cannot be parsed.
    pub parse_retries: u32,
}

impl<'a> Synthesizer<'a> {
    pub fn new(
        policy: &'a CategoryPolicy,
        hard_list: &'a HardConstraintList,
        params: &'a GenParams,
    ) -> Self {
        Self {
            policy,
            hard_list,
            params,
            parse_retries: 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum ChainFailure {
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("rewrite returned the unmodified instruction after retries")]
    IdentityRewrite,
}

/// A chain failure names the failing step and retains the steps that
/// completed before it.
#[derive(Debug, Error)]
#[error("chain for seed {seed_id} failed at step {k}: {source}")]
pub struct ChainError {
    pub seed_id: String,
    /// Failing step; 0 means the seed-output generation itself failed.
    pub k: usize,
    pub completed_steps: Vec<ChainStep>,
    #[source]
    pub source: ChainFailure,
}

/// Generates the output for an instruction: the instruction alone as the
/// user message, no added system text.
pub fn generate_output(
    instruction: &str,
    provider: &Provider,
    params: &GenParams,
) -> Result<String, ProviderError> {
    let request = ChatRequest::new(
        "",
        instruction,
        params.model_id.clone(),
        params.temperature,
        params.max_tokens,
    )?;
    Ok(provider.complete(&request)?.text)
}

/// Builds steps 1..n for a seed. Categories are drawn per step from the
/// policy; soft steps go through the rewrite prompt and hard steps append a
/// fresh entry from the predefined list.
pub fn build_chain<R: Rng>(
    seed: &SeedInstruction,
    n: usize,
    synthesizer: &Synthesizer,
    provider: &Provider,
    rng: &mut R,
) -> Result<InstructionChain, ChainError> {
    assert!(n >= 1, "build_chain requires n >= 1");
    let fail = |k: usize, steps: &[ChainStep], source: ChainFailure| ChainError {
        seed_id: seed.id.clone(),
        k,
        completed_steps: steps.to_vec(),
        source,
    };

    let seed_output = generate_output(&seed.text, provider, synthesizer.params)
        .map_err(|e| fail(0, &[], e.into()))?;

    let mut steps: Vec<ChainStep> = Vec::with_capacity(n);
    let mut history: Vec<CategoryDraw> = Vec::with_capacity(n);
    let mut used_hard: HashSet<usize> = HashSet::new();
    let mut current = seed.text.clone();

    for k in 1..=n {
        let draw = synthesis::sample_category(rng, synthesizer.policy, &history)
            .map_err(|e| fail(k, &steps, e.into()))?;

        let (subtype, rewrite) = match draw {
            CategoryDraw::Hard => {
                let (index, description) =
                    select_hard_constraint(synthesizer.hard_list, rng, &mut used_hard)
                        .map_err(|e| fail(k, &steps, e.into()))?;
                let rewrite = RewriteResult {
                    modified_instruction: apply_hard_constraint(&current, description),
                    added_constraint: description.to_string(),
                };
                (index.to_string(), rewrite)
            }
            CategoryDraw::Soft(soft) => {
                let rewrite = rewrite_with_retries(&current, &draw, synthesizer, provider)
                    .map_err(|e| fail(k, &steps, e))?;
                (soft.name().to_string(), rewrite)
            }
        };

        let warnings = validate_rewrite(&current, &rewrite).warnings;
        let output = generate_output(&rewrite.modified_instruction, provider, synthesizer.params)
            .map_err(|e| fail(k, &steps, e.into()))?;

        steps.push(ChainStep {
            k,
            category: draw.kind(),
            subtype,
            constraint: rewrite.added_constraint,
            instruction: rewrite.modified_instruction.clone(),
            output,
            warnings,
        });
        history.push(draw);
        current = rewrite.modified_instruction;
    }

    Ok(InstructionChain {
        seed_id: seed.id.clone(),
        seed_text: seed.text.clone(),
        seed_output,
        n,
        steps,
    })
}

/// One rewrite call plus up to `parse_retries` uncached re-asks when the
/// response cannot be parsed or does not actually modify the instruction.
fn rewrite_with_retries(
    instruction: &str,
    draw: &CategoryDraw,
    synthesizer: &Synthesizer,
    provider: &Provider,
) -> Result<RewriteResult, ChainFailure> {
    let request = build_rewrite_prompt(instruction, draw, synthesizer.params)?;
    let mut last_failure: Option<ChainFailure> = None;
    for attempt in 0..=synthesizer.parse_retries {
        let response = if attempt == 0 {
            provider.complete(&request)?
        } else {
            provider.complete_uncached(&request)?
        };
        match parse_rewrite(&response.text) {
            Ok(rewrite) if rewrite.modified_instruction == instruction => {
                last_failure = Some(ChainFailure::IdentityRewrite);
            }
            Ok(rewrite) => return Ok(rewrite),
            Err(e) => last_failure = Some(e.into()),
        }
    }
    Err(last_failure.expect("at least one attempt"))
}
