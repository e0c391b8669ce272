//! Seed instruction ingestion: load, filter, and deduplicate.
//!
//! Seeds arrive in a normalized JSONL format regardless of upstream corpus:
//! `{"id": str, "source": str, "text": str, "meta": {...}}`. Source-specific
//! selection rules are applied on load: conversational seeds keep only
//! rank-0 first-turn records, and task corpora can drop entries whose
//! reference output is too short to be interesting.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Oasst,
    SelfInstruct,
    SuperNatural,
    Other,
}

/// Optional per-source attributes carried alongside a seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub turn: Option<u32>,
    /// Whitespace-token length of the upstream reference output, if known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_output_len: Option<u32>,
}

impl SeedMeta {
    fn is_empty(&self) -> bool {
        self.rank.is_none() && self.turn.is_none() && self.ref_output_len.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInstruction {
    pub id: String,
    pub source: SeedSource,
    pub text: String,
    #[serde(default, skip_serializing_if = "SeedMeta::is_empty")]
    pub meta: SeedMeta,
}

/// Source-selection rules applied by [`load_seeds`].
#[derive(Debug, Clone)]
pub struct SeedFilters {
    /// Keep only rank-0, first-turn conversational seeds.
    pub oasst_rank0_turn0: bool,
    /// Drop task seeds whose known reference output is shorter than this
    /// many words. `None` disables the check.
    pub min_ref_output_words: Option<u32>,
}

impl Default for SeedFilters {
    fn default() -> Self {
        Self {
            oasst_rank0_turn0: true,
            min_ref_output_words: Some(10),
        }
    }
}

impl SeedFilters {
    pub fn keeps(&self, seed: &SeedInstruction) -> bool {
        match seed.source {
            SeedSource::Oasst if self.oasst_rank0_turn0 => {
                seed.meta.rank == Some(0) && seed.meta.turn == Some(0)
            }
            SeedSource::SuperNatural => match (self.min_ref_output_words, seed.meta.ref_output_len)
            {
                (Some(min), Some(len)) => len >= min,
                _ => true,
            },
            _ => true,
        }
    }
}

#[derive(Debug, Error)]
pub enum SeedError {
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
    #[error("{path}:{line}: record has an empty {field}")]
    EmptyField {
        path: String,
        line: usize,
        field: &'static str,
    },
}

/// Loads seeds from a JSONL file, keeping only records that pass `filters`.
/// Malformed lines and records missing `id` or `text` are reported with
/// their line number.
pub fn load_seeds(
    path: impl AsRef<Path>,
    filters: &SeedFilters,
) -> Result<Vec<SeedInstruction>, SeedError> {
    let path = path.as_ref();
    let raw: Vec<serde_json::Value> = jsonl::read(path)?;
    let mut seeds = Vec::new();
    for (idx, value) in raw.into_iter().enumerate() {
        let seed: SeedInstruction =
            serde_json::from_value(value).map_err(|e| jsonl::JsonlError::Malformed {
                path: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        if seed.id.trim().is_empty() {
            return Err(SeedError::EmptyField {
                path: path.display().to_string(),
                line: idx + 1,
                field: "id",
            });
        }
        if seed.text.trim().is_empty() {
            return Err(SeedError::EmptyField {
                path: path.display().to_string(),
                line: idx + 1,
                field: "text",
            });
        }
        if filters.keeps(&seed) {
            seeds.push(seed);
        }
    }
    Ok(seeds)
}

/// Keeps the first occurrence per normalized text (lowercased, whitespace
/// collapsed); input order is preserved.
pub fn dedupe(seeds: Vec<SeedInstruction>) -> Vec<SeedInstruction> {
    let mut seen = HashSet::new();
    seeds
        .into_iter()
        .filter(|seed| seen.insert(normalize(&seed.text)))
        .collect()
}

fn normalize(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn seed(id: &str, source: SeedSource, text: &str, meta: SeedMeta) -> SeedInstruction {
        SeedInstruction {
            id: id.into(),
            source,
            text: text.into(),
            meta,
        }
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(file, "{line}").unwrap();
        }
        file
    }

    #[test]
    fn oasst_rank0_turn0_kept_rank1_dropped() {
        let file = write_lines(&[
            r#"{"id":"a","source":"oasst","text":"first","meta":{"rank":0,"turn":0}}"#,
            r#"{"id":"b","source":"oasst","text":"second","meta":{"rank":1,"turn":0}}"#,
            r#"{"id":"c","source":"oasst","text":"third","meta":{"rank":0,"turn":2}}"#,
        ]);
        let seeds = load_seeds(file.path(), &SeedFilters::default()).unwrap();
        assert_eq!(seeds.len(), 1);
        assert_eq!(seeds[0].id, "a");
    }

    #[test]
    fn empty_file_gives_empty_list() {
        let file = write_lines(&[]);
        let seeds = load_seeds(file.path(), &SeedFilters::default()).unwrap();
        assert!(seeds.is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let file = write_lines(&[
            r#"{"id":"a","source":"other","text":"ok"}"#,
            r#"{"id":"b", broken"#,
        ]);
        let err = load_seeds(file.path(), &SeedFilters::default()).unwrap_err();
        assert!(err.to_string().contains(":2:"), "got: {err}");
    }

    #[test]
    fn missing_text_is_rejected() {
        let file = write_lines(&[r#"{"id":"a","source":"other","text":"   "}"#]);
        let err = load_seeds(file.path(), &SeedFilters::default()).unwrap_err();
        assert!(matches!(err, SeedError::EmptyField { field: "text", .. }));
    }

    #[test]
    fn short_reference_outputs_dropped_for_task_corpora() {
        let file = write_lines(&[
            r#"{"id":"a","source":"super_natural","text":"task one","meta":{"ref_output_len":3}}"#,
            r#"{"id":"b","source":"super_natural","text":"task two","meta":{"ref_output_len":25}}"#,
            r#"{"id":"c","source":"super_natural","text":"task three"}"#,
        ]);
        let seeds = load_seeds(file.path(), &SeedFilters::default()).unwrap();
        let ids: Vec<_> = seeds.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["b", "c"]);
    }

    #[test]
    fn unfiltered_sources_pass_unchanged() {
        let file = write_lines(&[
            r#"{"id":"a","source":"self_instruct","text":"anything","meta":{"rank":7}}"#,
        ]);
        let seeds = load_seeds(file.path(), &SeedFilters::default()).unwrap();
        assert_eq!(seeds.len(), 1);
    }

    #[test]
    fn dedupe_keeps_first_of_normalized_duplicates() {
        let seeds = vec![
            seed("1", SeedSource::Other, "Write a poem", SeedMeta::default()),
            seed("2", SeedSource::Other, "write a  poem", SeedMeta::default()),
        ];
        let out = dedupe(seeds);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "1");
    }

    #[test]
    fn dedupe_identity_on_distinct_list() {
        let seeds = vec![
            seed("1", SeedSource::Other, "a", SeedMeta::default()),
            seed("2", SeedSource::Other, "b", SeedMeta::default()),
        ];
        assert_eq!(dedupe(seeds.clone()), seeds);
    }

    #[test]
    fn dedupe_first_kept_rule() {
        let seeds = vec![
            seed("1", SeedSource::Other, "a", SeedMeta::default()),
            seed("2", SeedSource::Other, "b", SeedMeta::default()),
            seed("3", SeedSource::Other, "a", SeedMeta::default()),
        ];
        let out = dedupe(seeds);
        let ids: Vec<_> = out.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["1", "2"]);
    }

    #[test]
    fn dedupe_is_idempotent() {
        let seeds = vec![
            seed("1", SeedSource::Other, "A b", SeedMeta::default()),
            seed("2", SeedSource::Other, "a B", SeedMeta::default()),
            seed("3", SeedSource::Other, "c", SeedMeta::default()),
        ];
        let once = dedupe(seeds);
        let twice = dedupe(once.clone());
        assert_eq!(once, twice);
    }
}
