//! Pairwise judge tournament over a chain's outputs.
//!
//! At each step k the incumbent (previous winner, starting from the seed
//! output) is compared against the challenger (the step's fresh output)
//! under the step's instruction. Decisive verdicts emit a preference pair
//! and promote the winner; ties emit nothing and advance the challenger.
//! Every comparison is recorded verbatim for audit.
//!
//! The judge prompt itself tells the model that presentation order must not
//! matter, but a single query cannot enforce that. `BothOrders` mode asks
//! twice with the slots swapped and only accepts a winner named by both
//! answers; anything else is a tie.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::InstructionChain;
use crate::provider::{ChatRequest, Provider, ProviderError};
use crate::synthesis::GenParams;

const JUDGER_TEMPLATE_HEAD: &str = "You are a helpful assistant who reviews a debate between two other assistants in evaluating the quality of the outputs for a given instruction. The two assistants, Assistant (a) and Assistant (b), are given an instruction. Output (a) and Output (b) are generated by two different AI chatbots respectively. Assistant (a) and Assistant (b) have conflicting evaluations. Your goal is to review their evaluations and give your final decision on which output is better.
Here are some rules of the evaluation:
(1) You should prioritize evaluating whether the output honestly/precisely/closely executes the instruction, then consider its helpfulness, accuracy, level of detail, harmlessness, etc.
(2) Outputs should NOT contain more/less than what the instruction asks for, as such outputs do NOT precisely execute the instruction.
(3) You should avoid any potential bias and your judgment should be as objective as possible. For example, the order in which the outputs were presented should NOT affect your judgment, as Output (a) and Output (b) are **equally likely** to be the better.
Output your final verdict by strictly following this format: \"[[A]]\" if Output (a) is better, \"[[B]]\" if Output (b) is better, and \"[[C]]\" for a tie.";

/// Raw verdict marker: Output (a), Output (b), or a tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Left,
    Right,
    Tie,
}

/// Which underlying output sat in slot (a).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentedOrder {
    IncumbentFirst,
    ChallengerFirst,
}

/// One judge query, kept verbatim. `verdict` is `None` when no marker could
/// be parsed even after the reprompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeQuery {
    pub presented_order: PresentedOrder,
    pub raw_text: String,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonOutcome {
    IncumbentWins,
    ChallengerWins,
    Tie,
}

/// Full audit record of one incumbent-vs-challenger comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub record_id: String,
    pub seed_id: String,
    pub k: usize,
    pub instruction: String,
    pub incumbent: String,
    pub challenger: String,
    pub queries: Vec<JudgeQuery>,
    #[serde(rename = "final")]
    pub final_outcome: ComparisonOutcome,
    pub warnings: Vec<String>,
}

/// The (I_k, chosen, rejected) triplet with its audit reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub seed_id: String,
    pub k: usize,
    pub instruction: String,
    pub chosen: String,
    pub rejected: String,
    pub record_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMode {
    Single,
    #[default]
    BothOrders,
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("judge inputs must be non-empty")]
    EmptyInput,
    #[error("no verdict marker found in judge response")]
    UnparseableVerdict,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// A tournament abort preserves whatever was produced before the failure.
#[derive(Debug, Error)]
#[error("tournament for seed {seed_id} failed at step {k}: {source}")]
pub struct TournamentError {
    pub seed_id: String,
    pub k: usize,
    pub partial_pairs: Vec<PreferencePair>,
    pub partial_records: Vec<ComparisonRecord>,
    #[source]
    pub source: JudgeError,
}

/// The judge template with the instruction and the two outputs substituted
/// verbatim; slot (a) always receives `out_a`, never silently swapped.
pub fn build_judger_prompt(
    instruction: &str,
    out_a: &str,
    out_b: &str,
    params: &GenParams,
) -> Result<ChatRequest, JudgeError> {
    if instruction.is_empty() || out_a.is_empty() || out_b.is_empty() {
        return Err(JudgeError::EmptyInput);
    }
    let prompt = format!(
        "{JUDGER_TEMPLATE_HEAD}\n/* Given instruction */\n{instruction}\n/* The Start of Output (a) */\n{out_a}\n/* The End of Output (a) */\n/* The Start of Output (b) */\n{out_b}\n/* The End of Output (b) */"
    );
    Ok(ChatRequest::new(
        "",
        prompt,
        params.model_id.clone(),
        params.temperature,
        params.max_tokens,
    )?)
}

/// Maps the last `[[A]]` / `[[B]]` / `[[C]]` marker in the response; models
/// often reason aloud before settling, so the last marker wins.
pub fn parse_verdict(raw: &str) -> Result<Verdict, JudgeError> {
    let markers = [
        ("[[A]]", Verdict::Left),
        ("[[B]]", Verdict::Right),
        ("[[C]]", Verdict::Tie),
    ];
    markers
        .iter()
        .filter_map(|(marker, verdict)| raw.rfind(marker).map(|pos| (pos, *verdict)))
        .max_by_key(|(pos, _)| *pos)
        .map(|(_, verdict)| verdict)
        .ok_or(JudgeError::UnparseableVerdict)
}

/// What a single query named, once the presentation order is unwound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Named {
    Incumbent,
    Challenger,
    Tie,
    Unparseable,
}

fn unwind(order: PresentedOrder, verdict: Verdict) -> Named {
    match (order, verdict) {
        (_, Verdict::Tie) => Named::Tie,
        (PresentedOrder::IncumbentFirst, Verdict::Left) => Named::Incumbent,
        (PresentedOrder::IncumbentFirst, Verdict::Right) => Named::Challenger,
        (PresentedOrder::ChallengerFirst, Verdict::Left) => Named::Challenger,
        (PresentedOrder::ChallengerFirst, Verdict::Right) => Named::Incumbent,
    }
}

/// Outcome of [`judge_pair`] before it is wrapped into a chain-level record.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgeDecision {
    pub outcome: ComparisonOutcome,
    pub queries: Vec<JudgeQuery>,
    pub warnings: Vec<String>,
}

/// Runs one comparison. `Single` mode issues one query with a seeded random
/// presentation order; `BothOrders` issues two with the slots swapped and
/// declares a winner only when both answers name the same underlying
/// output. Unparseable verdicts get one uncached reprompt, then count as a
/// tie.
pub fn judge_pair<R: Rng>(
    instruction: &str,
    incumbent: &str,
    challenger: &str,
    mode: JudgeMode,
    provider: &Provider,
    params: &GenParams,
    rng: &mut R,
) -> Result<JudgeDecision, JudgeError> {
    if instruction.is_empty() || incumbent.is_empty() || challenger.is_empty() {
        return Err(JudgeError::EmptyInput);
    }
    let mut queries = Vec::new();
    let mut warnings = Vec::new();

    let ask = |order: PresentedOrder,
               queries: &mut Vec<JudgeQuery>,
               warnings: &mut Vec<String>|
     -> Result<Named, JudgeError> {
        let (out_a, out_b) = match order {
            PresentedOrder::IncumbentFirst => (incumbent, challenger),
            PresentedOrder::ChallengerFirst => (challenger, incumbent),
        };
        let request = build_judger_prompt(instruction, out_a, out_b, params)?;
        for attempt in 0..2 {
            let response = if attempt == 0 {
                provider.complete(&request)?
            } else {
                provider.complete_uncached(&request)?
            };
            let verdict = parse_verdict(&response.text).ok();
            queries.push(JudgeQuery {
                presented_order: order,
                raw_text: response.text,
                verdict,
            });
            if let Some(verdict) = verdict {
                return Ok(unwind(order, verdict));
            }
        }
        warnings.push("unparseable verdict after reprompt; treated as tie".to_string());
        Ok(Named::Unparseable)
    };

    let outcome = match mode {
        JudgeMode::Single => {
            let order = if rng.gen::<bool>() {
                PresentedOrder::IncumbentFirst
            } else {
                PresentedOrder::ChallengerFirst
            };
            match ask(order, &mut queries, &mut warnings)? {
                Named::Incumbent => ComparisonOutcome::IncumbentWins,
                Named::Challenger => ComparisonOutcome::ChallengerWins,
                Named::Tie | Named::Unparseable => ComparisonOutcome::Tie,
            }
        }
        JudgeMode::BothOrders => {
            let first = ask(PresentedOrder::IncumbentFirst, &mut queries, &mut warnings)?;
            let second = ask(PresentedOrder::ChallengerFirst, &mut queries, &mut warnings)?;
            match (first, second) {
                (Named::Incumbent, Named::Incumbent) => ComparisonOutcome::IncumbentWins,
                (Named::Challenger, Named::Challenger) => ComparisonOutcome::ChallengerWins,
                _ => ComparisonOutcome::Tie,
            }
        }
    };

    Ok(JudgeDecision {
        outcome,
        queries,
        warnings,
    })
}

/// Everything a finished tournament produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TournamentResult {
    pub pairs: Vec<PreferencePair>,
    pub final_winner: String,
    pub records: Vec<ComparisonRecord>,
}

/// Runs the incumbent-vs-challenger tournament over a complete chain.
///
/// The incumbent starts as the seed output. For k = 1..n the step output
/// challenges: a decisive verdict emits `(I_k, winner, loser)` and promotes
/// the winner; a tie emits nothing and the challenger advances (it is the
/// only candidate generated for the current instruction).
pub fn reorder_chain<R: Rng>(
    chain: &InstructionChain,
    mode: JudgeMode,
    provider: &Provider,
    params: &GenParams,
    rng: &mut R,
) -> Result<TournamentResult, Box<TournamentError>> {
    let mut pairs: Vec<PreferencePair> = Vec::new();
    let mut records: Vec<ComparisonRecord> = Vec::new();
    let mut incumbent = chain.seed_output.clone();

    for step in &chain.steps {
        let challenger = step.output.clone();
        if challenger == incumbent {
            // A preference between byte-identical texts is meaningless; skip
            // the comparison and advance the challenger like a tie.
            log::warn!(
                "seed {} step {}: incumbent and challenger are identical, skipping comparison",
                chain.seed_id,
                step.k
            );
            incumbent = challenger;
            continue;
        }
        let decision = judge_pair(
            &step.instruction,
            &incumbent,
            &challenger,
            mode,
            provider,
            params,
            rng,
        )
        .map_err(|source| {
            Box::new(TournamentError {
                seed_id: chain.seed_id.clone(),
                k: step.k,
                partial_pairs: pairs.clone(),
                partial_records: records.clone(),
                source,
            })
        })?;

        let record_id = format!("{}#k{}", chain.seed_id, step.k);
        records.push(ComparisonRecord {
            record_id: record_id.clone(),
            seed_id: chain.seed_id.clone(),
            k: step.k,
            instruction: step.instruction.clone(),
            incumbent: incumbent.clone(),
            challenger: challenger.clone(),
            queries: decision.queries,
            final_outcome: decision.outcome,
            warnings: decision.warnings,
        });

        match decision.outcome {
            ComparisonOutcome::IncumbentWins => {
                pairs.push(PreferencePair {
                    seed_id: chain.seed_id.clone(),
                    k: step.k,
                    instruction: step.instruction.clone(),
                    chosen: incumbent.clone(),
                    rejected: challenger,
                    record_ref: record_id,
                });
            }
            ComparisonOutcome::ChallengerWins => {
                pairs.push(PreferencePair {
                    seed_id: chain.seed_id.clone(),
                    k: step.k,
                    instruction: step.instruction.clone(),
                    chosen: challenger.clone(),
                    rejected: incumbent.clone(),
                    record_ref: record_id,
                });
                incumbent = challenger;
            }
            ComparisonOutcome::Tie => {
                incumbent = challenger;
            }
        }
    }

    Ok(TournamentResult {
        pairs,
        final_winner: incumbent,
        records,
    })
}
