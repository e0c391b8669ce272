//! Constraint synthesis: category sampling, rewrite prompting, result
//! parsing, and the predefined hard-constraint list.
//!
//! Soft constraints (content, situation, style) are produced by prompting
//! the provider with a subtype-specific rewrite template and parsing the
//! structured reply. Hard constraints are drawn from a predefined,
//! user-editable description list and appended to the instruction locally —
//! no model call involved.

mod templates;

pub use templates::{marker_phrase, rewrite_prompt};

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::{ChatRequest, ProviderError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryKind {
    Content,
    Situation,
    Style,
    Hard,
}

impl fmt::Display for CategoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CategoryKind::Content => "content",
            CategoryKind::Situation => "situation",
            CategoryKind::Style => "style",
            CategoryKind::Hard => "hard",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContentSubtype {
    OpenQa,
    LanguageLimitations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SituationSubtype {
    Suggestion,
    RolePlay,
    Story,
}

/// A soft subtype selects one of the rewrite templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SoftSubtype {
    Content(ContentSubtype),
    Situation(SituationSubtype),
    Style,
}

impl SoftSubtype {
    pub const ALL: [SoftSubtype; 6] = [
        SoftSubtype::Content(ContentSubtype::OpenQa),
        SoftSubtype::Content(ContentSubtype::LanguageLimitations),
        SoftSubtype::Situation(SituationSubtype::Suggestion),
        SoftSubtype::Situation(SituationSubtype::RolePlay),
        SoftSubtype::Situation(SituationSubtype::Story),
        SoftSubtype::Style,
    ];

    pub fn kind(&self) -> CategoryKind {
        match self {
            SoftSubtype::Content(_) => CategoryKind::Content,
            SoftSubtype::Situation(_) => CategoryKind::Situation,
            SoftSubtype::Style => CategoryKind::Style,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SoftSubtype::Content(ContentSubtype::OpenQa) => "open_qa",
            SoftSubtype::Content(ContentSubtype::LanguageLimitations) => "language_limitations",
            SoftSubtype::Situation(SituationSubtype::Suggestion) => "suggestion",
            SoftSubtype::Situation(SituationSubtype::RolePlay) => "role_play",
            SoftSubtype::Situation(SituationSubtype::Story) => "story",
            SoftSubtype::Style => "style",
        }
    }
}

/// Category drawn for one chain step. Hard draws pick their list index later
/// via [`select_hard_constraint`], which needs the chain's used-index set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryDraw {
    Soft(SoftSubtype),
    Hard,
}

impl CategoryDraw {
    pub fn kind(&self) -> CategoryKind {
        match self {
            CategoryDraw::Soft(subtype) => subtype.kind(),
            CategoryDraw::Hard => CategoryKind::Hard,
        }
    }
}

/// Relative sampling weights per category kind. Defaults are uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoryPolicy {
    pub content: f64,
    pub situation: f64,
    pub style: f64,
    pub hard: f64,
}

impl Default for CategoryPolicy {
    fn default() -> Self {
        Self {
            content: 1.0,
            situation: 1.0,
            style: 1.0,
            hard: 1.0,
        }
    }
}

impl CategoryPolicy {
    fn weights(&self) -> [(CategoryKind, f64); 4] {
        [
            (CategoryKind::Content, self.content),
            (CategoryKind::Situation, self.situation),
            (CategoryKind::Style, self.style),
            (CategoryKind::Hard, self.hard),
        ]
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        let weights = self.weights();
        if weights.iter().any(|(_, w)| *w < 0.0 || !w.is_finite()) {
            return Err(SynthesisError::DegeneratePolicy(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if weights.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            return Err(SynthesisError::DegeneratePolicy(
                "all weights are zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("degenerate category policy: {0}")]
    DegeneratePolicy(String),
    #[error("rewrite prompts apply to soft categories only")]
    HardCategoryPrompt,
    #[error("no JSON object found in rewrite response")]
    NoJsonObject,
    #[error("rewrite response missing field '{0}'")]
    MissingField(&'static str),
    #[error("rewrite response field '{0}' is empty")]
    EmptyField(&'static str),
    #[error("hard constraint list exhausted for this chain")]
    HardListExhausted,
    #[error("hard constraint list is empty")]
    EmptyHardList,
    #[error("hard constraint list has duplicate entry: {0:?}")]
    DuplicateHardEntry(String),
    #[error("cannot read hard constraint list {path}: {source}")]
    HardListIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Draws a category kind by the policy weights, then a uniform subtype
/// within soft kinds. Deterministic for a fixed rng seed. The history of
/// earlier draws is accepted for custom policies; the default weight policy
/// does not consult it.
pub fn sample_category<R: Rng>(
    rng: &mut R,
    policy: &CategoryPolicy,
    _history: &[CategoryDraw],
) -> Result<CategoryDraw, SynthesisError> {
    policy.validate()?;
    let weights = policy.weights();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut roll = rng.gen::<f64>() * total;
    let mut kind = CategoryKind::Hard;
    for (candidate, weight) in weights {
        if roll < weight {
            kind = candidate;
            break;
        }
        roll -= weight;
    }
    Ok(match kind {
        CategoryKind::Content => {
            let subtype =
                [ContentSubtype::OpenQa, ContentSubtype::LanguageLimitations][rng.gen_range(0..2)];
            CategoryDraw::Soft(SoftSubtype::Content(subtype))
        }
        CategoryKind::Situation => {
            let subtype = [
                SituationSubtype::Suggestion,
                SituationSubtype::RolePlay,
                SituationSubtype::Story,
            ][rng.gen_range(0..3)];
            CategoryDraw::Soft(SoftSubtype::Situation(subtype))
        }
        CategoryKind::Style => CategoryDraw::Soft(SoftSubtype::Style),
        CategoryKind::Hard => CategoryDraw::Hard,
    })
}

/// Generation parameters attached to every synthesized request.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            model_id: "gpt-4o".into(),
            temperature: 0.0,
            max_tokens: 2048,
        }
    }
}

/// Builds the rewrite request for a soft subtype: the subtype template with
/// the instruction substituted verbatim, sent as the user message.
pub fn build_rewrite_prompt(
    instruction: &str,
    category: &CategoryDraw,
    params: &GenParams,
) -> Result<ChatRequest, SynthesisError> {
    let subtype = match category {
        CategoryDraw::Soft(subtype) => *subtype,
        CategoryDraw::Hard => return Err(SynthesisError::HardCategoryPrompt),
    };
    let prompt = rewrite_prompt(instruction, subtype);
    Ok(ChatRequest::new(
        "",
        prompt,
        params.model_id.clone(),
        params.temperature,
        params.max_tokens,
    )?)
}

/// A parsed rewrite: the constrained instruction and the constraint that was
/// added to produce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteResult {
    pub modified_instruction: String,
    pub added_constraint: String,
}

/// Extracts the rewrite fields from a model response, tolerating prose and
/// code fences around the JSON object. The first balanced object that parses
/// wins.
pub fn parse_rewrite(response: &str) -> Result<RewriteResult, SynthesisError> {
    let object = first_json_object(response).ok_or(SynthesisError::NoJsonObject)?;
    let modified = field_text(&object, "modified_instruction")?;
    let added = field_text(&object, "added_constraint")?;
    Ok(RewriteResult {
        modified_instruction: modified,
        added_constraint: added,
    })
}

fn field_text(
    object: &serde_json::Map<String, serde_json::Value>,
    name: &'static str,
) -> Result<String, SynthesisError> {
    let value = object.get(name).ok_or(SynthesisError::MissingField(name))?;
    let text = value
        .as_str()
        .ok_or(SynthesisError::MissingField(name))?
        .trim()
        .to_string();
    if text.is_empty() {
        return Err(SynthesisError::EmptyField(name));
    }
    Ok(text)
}

/// Scans for balanced `{...}` candidates (string-literal aware) and returns
/// the first one that parses as a JSON object.
fn first_json_object(text: &str) -> Option<serde_json::Map<String, serde_json::Value>> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(open) = text[start..].find('{').map(|i| i + start) {
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut end = None;
        for (offset, &b) in bytes[open..].iter().enumerate() {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(open + offset + 1);
                        break;
                    }
                }
                _ => {}
            }
        }
        // Unbalanced or unparseable candidates are skipped: a stray `{` in
        // surrounding prose must not hide a valid object further on.
        if let Some(end) = end {
            if let Ok(serde_json::Value::Object(map)) = serde_json::from_str(&text[open..end]) {
                return Some(map);
            }
        }
        start = open + 1;
    }
    None
}

/// Advisory validation of a rewrite against its source instruction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RewriteValidation {
    pub warnings: Vec<String>,
}

impl RewriteValidation {
    pub fn is_ok(&self) -> bool {
        self.warnings.is_empty()
    }
}

fn word_count(text: &str) -> isize {
    text.split_whitespace().count() as isize
}

/// Checks the 10–20-word growth guideline and that the added constraint
/// actually shows up in the rewritten text. Violations warn, never reject.
pub fn validate_rewrite(original: &str, result: &RewriteResult) -> RewriteValidation {
    let mut warnings = Vec::new();
    if result.modified_instruction == original {
        warnings.push("no modification".to_string());
        return RewriteValidation { warnings };
    }
    let delta = word_count(&result.modified_instruction) - word_count(original);
    if !(10..=20).contains(&delta) {
        warnings.push(format!("length delta {delta} outside [10,20]"));
    }
    let added: Vec<String> = content_tokens(&result.added_constraint);
    if !added.is_empty() {
        let modified: HashSet<String> = content_tokens(&result.modified_instruction)
            .into_iter()
            .collect();
        let overlap = added.iter().filter(|t| modified.contains(*t)).count();
        if overlap * 2 < added.len() {
            warnings.push("added constraint text barely overlaps the modified instruction".into());
        }
    }
    RewriteValidation { warnings }
}

fn content_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.len() >= 4)
        .map(str::to_string)
        .collect()
}

/// The predefined hard-constraint description list. Entries are
/// programmatically checkable restrictions: length bounds, keyword
/// inclusion/exclusion, formatting, casing.
#[derive(Debug, Clone, PartialEq)]
pub struct HardConstraintList {
    entries: Vec<String>,
}

const DEFAULT_HARD_CONSTRAINTS: [&str; 12] = [
    "Limit the response to at most 100 words.",
    "Write the response in at least 300 words.",
    "Include the word \"example\" at least twice in the response.",
    "Do not use the word \"very\" anywhere in the response.",
    "Format the response as exactly three bullet points.",
    "Format the entire response as a valid JSON object.",
    "Write the response entirely in lowercase letters.",
    "Write the response entirely in uppercase letters.",
    "Organize the response into exactly two paragraphs separated by a blank line.",
    "End the response with the exact sentence \"That is all.\"",
    "Begin the response with the word \"Certainly\".",
    "Keep every sentence shorter than 15 words.",
];

impl Default for HardConstraintList {
    fn default() -> Self {
        Self {
            entries: DEFAULT_HARD_CONSTRAINTS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl HardConstraintList {
    pub fn new(entries: Vec<String>) -> Result<Self, SynthesisError> {
        if entries.is_empty() {
            return Err(SynthesisError::EmptyHardList);
        }
        let mut seen = HashSet::new();
        for entry in &entries {
            if !seen.insert(entry.as_str()) {
                return Err(SynthesisError::DuplicateHardEntry(entry.clone()));
            }
        }
        Ok(Self { entries })
    }

    /// Loads one description per line; blank lines and `#` comments are
    /// ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SynthesisError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SynthesisError::HardListIo {
            path: path.display().to_string(),
            source,
        })?;
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(str::to_string)
            .collect();
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.entries.get(index).map(String::as_str)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }
}

/// Uniform draw among the list entries not yet used by this chain; the
/// chosen index is recorded into `used` so a chain never repeats a hard
/// constraint.
pub fn select_hard_constraint<'a, R: Rng>(
    list: &'a HardConstraintList,
    rng: &mut R,
    used: &mut HashSet<usize>,
) -> Result<(usize, &'a str), SynthesisError> {
    let unused: Vec<usize> = (0..list.len()).filter(|i| !used.contains(i)).collect();
    if unused.is_empty() {
        return Err(SynthesisError::HardListExhausted);
    }
    let index = unused[rng.gen_range(0..unused.len())];
    used.insert(index);
    Ok((index, list.get(index).expect("index in range")))
}

/// Forms the next instruction for a hard constraint by appending the
/// description; hard steps never go through the rewrite model.
pub fn apply_hard_constraint(instruction: &str, description: &str) -> String {
    format!("{} {}", instruction.trim_end(), description)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_weights_force_kind() {
        let policy = CategoryPolicy {
            content: 1.0,
            situation: 0.0,
            style: 0.0,
            hard: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let draw = sample_category(&mut rng, &policy, &[]).unwrap();
            assert_eq!(draw.kind(), CategoryKind::Content);
        }
    }

    #[test]
    fn all_zero_weights_rejected() {
        let policy = CategoryPolicy {
            content: 0.0,
            situation: 0.0,
            style: 0.0,
            hard: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_category(&mut rng, &policy, &[]),
            Err(SynthesisError::DegeneratePolicy(_))
        ));
    }

    #[test]
    fn fixed_seed_reproduces_draw_sequence() {
        let policy = CategoryPolicy::default();
        let draws = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100)
                .map(|_| sample_category(&mut rng, &policy, &[]).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draws(42), draws(42));
    }

    #[test]
    fn empirical_frequencies_match_weights() {
        let policy = CategoryPolicy {
            content: 2.0,
            situation: 1.0,
            style: 1.0,
            hard: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            let draw = sample_category(&mut rng, &policy, &[]).unwrap();
            let slot = match draw.kind() {
                CategoryKind::Content => 0,
                CategoryKind::Situation => 1,
                CategoryKind::Style => 2,
                CategoryKind::Hard => 3,
            };
            counts[slot] += 1;
        }
        let expected = [0.4, 0.2, 0.2, 0.2];
        for (count, expect) in counts.iter().zip(expected) {
            let freq = *count as f64 / n as f64;
            assert!(
                (freq - expect).abs() <= 0.02,
                "frequency {freq} too far from {expect}"
            );
        }
    }

    #[test]
    fn rewrite_prompt_carries_subtype_markers() {
        let params = GenParams::default();
        let open_qa = CategoryDraw::Soft(SoftSubtype::Content(ContentSubtype::OpenQa));
        let req = build_rewrite_prompt("Write a poem", &open_qa, &params).unwrap();
        assert!(req.user_text.contains("Narrow Down the Topic"));
        assert!(req.user_text.contains("Write a poem"));

        let role_play = CategoryDraw::Soft(SoftSubtype::Situation(SituationSubtype::RolePlay));
        let req = build_rewrite_prompt("Write a poem", &role_play, &params).unwrap();
        assert!(req.user_text.contains("Specify a Role"));

        let style = CategoryDraw::Soft(SoftSubtype::Style);
        let req = build_rewrite_prompt("Write a poem", &style, &params).unwrap();
        assert!(req.user_text.contains("Tone and Emotion"));
    }

    #[test]
    fn rewrite_prompt_contains_instruction_and_marker_for_every_subtype() {
        let instruction = "Summarize the plot of a novel";
        for subtype in SoftSubtype::ALL {
            let prompt = rewrite_prompt(instruction, subtype);
            assert!(
                prompt.contains(instruction),
                "{subtype:?} lost the instruction"
            );
            assert!(
                prompt.contains(marker_phrase(subtype)),
                "{subtype:?} missing its marker"
            );
        }
    }

    #[test]
    fn hard_category_has_no_rewrite_prompt() {
        let err =
            build_rewrite_prompt("x", &CategoryDraw::Hard, &GenParams::default()).unwrap_err();
        assert!(matches!(err, SynthesisError::HardCategoryPrompt));
    }

    #[test]
    fn parse_direct_json() {
        let result =
            parse_rewrite(r#"{"modified_instruction":"X do Y","added_constraint":"do Y"}"#)
                .unwrap();
        assert_eq!(result.modified_instruction, "X do Y");
        assert_eq!(result.added_constraint, "do Y");
    }

    #[test]
    fn parse_fenced_json() {
        let response = "```json\n{\"modified_instruction\":\"A\",\"added_constraint\":\"B\"}\n```";
        let result = parse_rewrite(response).unwrap();
        assert_eq!(result.modified_instruction, "A");
        assert_eq!(result.added_constraint, "B");
    }

    #[test]
    fn parse_json_embedded_in_prose() {
        let response = "Sure! Here is the rewrite:\n{\"modified_instruction\": \"A {nested} brace\", \"added_constraint\": \"B\"}\nHope that helps.";
        let result = parse_rewrite(response).unwrap();
        assert_eq!(result.modified_instruction, "A {nested} brace");
    }

    #[test]
    fn parse_skips_stray_unbalanced_brace_before_object() {
        let response = "Note the { character is special. {\"modified_instruction\":\"A\",\"added_constraint\":\"B\"}";
        let result = parse_rewrite(response).unwrap();
        assert_eq!(result.modified_instruction, "A");

        let response = "prose {not json} more {\"modified_instruction\":\"A\",\"added_constraint\":\"B\"}";
        let result = parse_rewrite(response).unwrap();
        assert_eq!(result.added_constraint, "B");
    }

    #[test]
    fn parse_failures() {
        assert!(matches!(
            parse_rewrite("Sure! here you go"),
            Err(SynthesisError::NoJsonObject)
        ));
        assert!(matches!(
            parse_rewrite(r#"{"modified_instruction":"A"}"#),
            Err(SynthesisError::MissingField("added_constraint"))
        ));
        assert!(matches!(
            parse_rewrite(r#"{"modified_instruction":"A","added_constraint":"  "}"#),
            Err(SynthesisError::EmptyField("added_constraint"))
        ));
    }

    #[test]
    fn parse_serialize_round_trip() {
        let result = RewriteResult {
            modified_instruction: "Write a poem about rust, in iambic pentameter".into(),
            added_constraint: "in iambic pentameter".into(),
        };
        let serialized = serde_json::to_string(&result).unwrap();
        assert_eq!(parse_rewrite(&serialized).unwrap(), result);
    }

    #[test]
    fn validation_in_range_delta_is_ok() {
        let original = "Write a poem";
        let result = RewriteResult {
            modified_instruction:
                "Write a poem about the sea that mentions tides, gulls, salt, ships, storms, moonlight and one tall lighthouse"
                    .into(),
            added_constraint: "mentions tides, gulls, salt, ships, storms, moonlight and one tall lighthouse".into(),
        };
        let delta = result.modified_instruction.split_whitespace().count() as isize
            - original.split_whitespace().count() as isize;
        assert_eq!(delta, 15);
        assert!(validate_rewrite(original, &result).is_ok());
    }

    #[test]
    fn validation_flags_out_of_range_delta() {
        let original = "Write a poem";
        let padding = vec!["word"; 43].join(" ");
        let result = RewriteResult {
            modified_instruction: format!("Write a poem {padding}"),
            added_constraint: padding.clone(),
        };
        let report = validate_rewrite(original, &result);
        assert!(report
            .warnings
            .iter()
            .any(|w| w == "length delta 43 outside [10,20]"));
    }

    #[test]
    fn validation_flags_identity_rewrite() {
        let result = RewriteResult {
            modified_instruction: "Write a poem".into(),
            added_constraint: "something".into(),
        };
        let report = validate_rewrite("Write a poem", &result);
        assert_eq!(report.warnings, vec!["no modification".to_string()]);
    }

    #[test]
    fn hard_selection_forced_draws() {
        let list = HardConstraintList::new(vec!["only entry".into()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut used = HashSet::new();
        let (index, text) = select_hard_constraint(&list, &mut rng, &mut used).unwrap();
        assert_eq!(index, 0);
        assert_eq!(text, "only entry");

        let list = HardConstraintList::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let mut used: HashSet<usize> = [0, 1].into_iter().collect();
        let (index, text) = select_hard_constraint(&list, &mut rng, &mut used).unwrap();
        assert_eq!(index, 2);
        assert_eq!(text, "c");
    }

    #[test]
    fn hard_selection_exhaustion() {
        let list = HardConstraintList::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut used: HashSet<usize> = [0, 1, 2].into_iter().collect();
        assert!(matches!(
            select_hard_constraint(&list, &mut rng, &mut used),
            Err(SynthesisError::HardListExhausted)
        ));
    }

    #[test]
    fn hard_selection_never_repeats() {
        let list = HardConstraintList::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut used = HashSet::new();
        let mut seen = HashSet::new();
        for _ in 0..list.len() {
            let (index, _) = select_hard_constraint(&list, &mut rng, &mut used).unwrap();
            assert!(seen.insert(index), "index {index} repeated");
        }
    }

    #[test]
    fn default_hard_list_is_valid() {
        let list = HardConstraintList::default();
        assert_eq!(list.len(), 12);
        HardConstraintList::new(list.entries().to_vec()).unwrap();
    }

    #[test]
    fn hard_list_file_parsing() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write;
        writeln!(file, "# comment").unwrap();
        writeln!(file, "Use at most 50 words.").unwrap();
        writeln!(file).unwrap();
        writeln!(file, "Answer as a bullet list.").unwrap();
        let list = HardConstraintList::from_file(file.path()).unwrap();
        assert_eq!(list.len(), 2);
    }
}
