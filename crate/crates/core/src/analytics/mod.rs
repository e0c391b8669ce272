//! Analytics: ranking-agreement metrics, a scalar reference implementation
//! of the DPO+SFT loss, dataset statistics, and verb-frequency reporting.

mod verbs;

pub use verbs::{verb_frequency, verbs_to_text, VerbCount, VerbLexicon};

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curriculum::DpoRow;
use crate::jsonl;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("ranking items must be distinct and non-empty")]
    InvalidRanking,
    #[error("rankings must cover the same item set")]
    MismatchedItems,
    #[error("ranking agreement needs at least {0} items")]
    TooFewItems(usize),
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("loss batch is empty")]
    EmptyBatch,
    #[error("loss sample {0} contains a non-finite log-probability")]
    NonFiniteSample(usize),
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
}

/// An ordering over distinct item identifiers, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    items: Vec<String>,
}

impl Ranking {
    pub fn new(items: Vec<String>) -> Result<Self, AnalyticsError> {
        if items.is_empty() {
            return Err(AnalyticsError::InvalidRanking);
        }
        let mut seen = std::collections::HashSet::new();
        for item in &items {
            if item.is_empty() || !seen.insert(item.as_str()) {
                return Err(AnalyticsError::InvalidRanking);
            }
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    fn positions(&self) -> HashMap<&str, usize> {
        self.items
            .iter()
            .enumerate()
            .map(|(pos, item)| (item.as_str(), pos))
            .collect()
    }
}

fn check_same_items(r1: &Ranking, r2: &Ranking) -> Result<(), AnalyticsError> {
    if r1.len() != r2.len() {
        return Err(AnalyticsError::MismatchedItems);
    }
    let set1: std::collections::HashSet<&str> = r1.items.iter().map(String::as_str).collect();
    if !r2.items.iter().all(|item| set1.contains(item.as_str())) {
        return Err(AnalyticsError::MismatchedItems);
    }
    Ok(())
}

/// Kendall tau by direct pair enumeration:
/// `sum sgn(r1(i)-r1(j)) * sgn(r2(i)-r2(j)) / (n(n-1)/2)` over item pairs
/// i < j. Items are distinct, so no tie correction applies.
pub fn kendall_tau(r1: &Ranking, r2: &Ranking) -> Result<f64, AnalyticsError> {
    check_same_items(r1, r2)?;
    let n = r1.len();
    if n < 2 {
        return Err(AnalyticsError::TooFewItems(2));
    }
    let pos2 = r2.positions();
    let mut sum: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            // In r1 item at index i precedes item at index j.
            let a = pos2[r1.items[i].as_str()] as i64;
            let b = pos2[r1.items[j].as_str()] as i64;
            sum += if a < b { 1 } else { -1 };
        }
    }
    let denom = (n * (n - 1) / 2) as f64;
    Ok(sum as f64 / denom)
}

/// Position consistency: the fraction of items occupying the same position
/// in both rankings.
pub fn position_consistency(r1: &Ranking, r2: &Ranking) -> Result<f64, AnalyticsError> {
    check_same_items(r1, r2)?;
    let fixed = r1
        .items
        .iter()
        .zip(&r2.items)
        .filter(|(a, b)| a == b)
        .count();
    Ok(fixed as f64 / r1.len() as f64)
}

/// Per-sample policy/reference log-probabilities for the chosen and rejected
/// responses. Values are sums over tokens supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSample {
    pub logp_policy_chosen: f64,
    pub logp_ref_chosen: f64,
    pub logp_policy_rejected: f64,
    pub logp_ref_rejected: f64,
}

impl LossSample {
    fn is_finite(&self) -> bool {
        self.logp_policy_chosen.is_finite()
            && self.logp_ref_chosen.is_finite()
            && self.logp_policy_rejected.is_finite()
            && self.logp_ref_rejected.is_finite()
    }
}

/// Mean-reduced losses over a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub dpo: f64,
    pub sft: f64,
    pub total: f64,
}

/// Numerically stable softplus: `ln(1 + e^x)` without overflow for large
/// positive x or cancellation for large negative x.
pub fn stable_softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// The chosen/rejected preference margin for one sample, scaled by beta.
pub fn preference_margin(sample: &LossSample, beta: f64) -> f64 {
    beta * ((sample.logp_policy_chosen - sample.logp_ref_chosen)
        - (sample.logp_policy_rejected - sample.logp_ref_rejected))
}

/// Per-sample DPO term `-log sigmoid(margin)`, computed as
/// `softplus(-margin)`.
pub fn dpo_term(sample: &LossSample, beta: f64) -> f64 {
    stable_softplus(-preference_margin(sample, beta))
}

/// Mean DPO loss, mean SFT loss (`-logp_policy_chosen`), and their sum.
pub fn dpo_sft_loss(batch: &[LossSample], beta: f64) -> Result<LossBreakdown, AnalyticsError> {
    if batch.is_empty() {
        return Err(AnalyticsError::EmptyBatch);
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(AnalyticsError::NonPositiveBeta(beta));
    }
    let mut dpo_sum = 0.0;
    let mut sft_sum = 0.0;
    for (idx, sample) in batch.iter().enumerate() {
        if !sample.is_finite() {
            return Err(AnalyticsError::NonFiniteSample(idx));
        }
        dpo_sum += dpo_term(sample, beta);
        sft_sum += -sample.logp_policy_chosen;
    }
    let n = batch.len() as f64;
    let dpo = dpo_sum / n;
    let sft = sft_sum / n;
    Ok(LossBreakdown {
        dpo,
        sft,
        total: dpo + sft,
    })
}

/// One row of the per-stage statistics table: constraint range, pair count,
/// and mean whitespace-token instruction length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub constraints: String,
    pub preference_pairs: usize,
    pub avg_instruction_length: f64,
    /// Set when the stage had no valid rows, making the average vacuous.
    pub empty: bool,
}

/// A malformed line noted while computing statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsLineError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct StatsReport {
    pub rows: Vec<StatsRow>,
    pub errors: Vec<StatsLineError>,
}

impl StatsReport {
    /// Aligned-column plain text rendering of the table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:>18} {:>12}\n",
            "# Constraints", "# Preference Pairs", "Avg Length"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<14} {:>18} {:>12.1}{}\n",
                row.constraints,
                row.preference_pairs,
                row.avg_instruction_length,
                if row.empty { "  (empty)" } else { "" }
            ));
        }
        if !self.errors.is_empty() {
            out.push_str(&format!(
                "\n{} malformed line(s) skipped:\n",
                self.errors.len()
            ));
            for err in &self.errors {
                out.push_str(&format!("  {}:{}: {}\n", err.file, err.line, err.message));
            }
        }
        out
    }
}

/// Input to [`dataset_stats`]: a display label and the stage's dpo.jsonl.
#[derive(Debug, Clone)]
pub struct StageFiles {
    pub label: String,
    pub dpo_path: PathBuf,
}

fn token_len(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Per stage: pair count and mean instruction length in whitespace tokens.
/// Malformed lines are reported but the row is still computed over the
/// valid ones.
pub fn dataset_stats(stage_files: &[StageFiles]) -> Result<StatsReport, AnalyticsError> {
    let mut report = StatsReport::default();
    for stage in stage_files {
        let (rows, line_errors): (Vec<DpoRow>, _) = jsonl::read_lossy(&stage.dpo_path)?;
        for err in line_errors {
            report.errors.push(StatsLineError {
                file: stage.dpo_path.display().to_string(),
                line: err.line,
                message: err.message,
            });
        }
        let count = rows.len();
        let avg = if count == 0 {
            0.0
        } else {
            rows.iter()
                .map(|r| token_len(&r.instruction))
                .sum::<usize>() as f64
                / count as f64
        };
        report.rows.push(StatsRow {
            constraints: stage.label.clone(),
            preference_pairs: count,
            avg_instruction_length: avg,
            empty: count == 0,
        });
    }
    Ok(report)
}
