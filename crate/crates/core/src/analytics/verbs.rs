//! Verb-frequency reporting over instruction leading tokens.
//!
//! An instruction counts toward a verb when its first token (lowercased,
//! punctuation stripped) appears in the imperative-verb lexicon. The
//! lexicon ships with a default list and can be replaced by a one-word-per-
//! line file.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::jsonl;

const DEFAULT_VERBS: &[&str] = &[
    "add",
    "analyze",
    "answer",
    "argue",
    "arrange",
    "brainstorm",
    "build",
    "calculate",
    "categorize",
    "check",
    "choose",
    "classify",
    "compare",
    "compile",
    "complete",
    "compose",
    "construct",
    "convert",
    "correct",
    "count",
    "craft",
    "create",
    "define",
    "describe",
    "design",
    "determine",
    "develop",
    "devise",
    "discuss",
    "draft",
    "draw",
    "edit",
    "enumerate",
    "estimate",
    "evaluate",
    "examine",
    "explain",
    "extract",
    "find",
    "formulate",
    "generate",
    "give",
    "help",
    "identify",
    "illustrate",
    "imagine",
    "implement",
    "improve",
    "interpret",
    "invent",
    "investigate",
    "justify",
    "list",
    "make",
    "name",
    "organize",
    "outline",
    "paraphrase",
    "plan",
    "predict",
    "present",
    "produce",
    "propose",
    "prove",
    "provide",
    "rank",
    "recommend",
    "rewrite",
    "review",
    "select",
    "show",
    "simplify",
    "solve",
    "sort",
    "state",
    "suggest",
    "summarize",
    "tell",
    "translate",
    "transform",
    "write",
];

/// The set of leading tokens treated as imperative verbs.
#[derive(Debug, Clone)]
pub struct VerbLexicon {
    words: HashSet<String>,
}

impl Default for VerbLexicon {
    fn default() -> Self {
        Self {
            words: DEFAULT_VERBS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl VerbLexicon {
    pub fn new(words: impl IntoIterator<Item = String>) -> Self {
        Self {
            words: words.into_iter().map(|w| w.trim().to_lowercase()).collect(),
        }
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, AnalyticsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| {
            AnalyticsError::Jsonl(jsonl::JsonlError::Io {
                path: path.display().to_string(),
                source,
            })
        })?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        ))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbCount {
    pub verb: String,
    pub count: usize,
}

fn leading_token(instruction: &str) -> Option<String> {
    let token: String = instruction
        .split(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '\''))
        .find(|t| !t.is_empty())?
        .to_lowercase();
    if token.is_empty() {
        None
    } else {
        Some(token)
    }
}

/// Counts instructions whose leading token is a lexicon verb and returns the
/// `top_n` verbs by count. Equal counts tie-break alphabetically so the
/// histogram is deterministic.
pub fn verb_frequency(
    instructions: &[String],
    top_n: usize,
    lexicon: &VerbLexicon,
) -> Vec<VerbCount> {
    assert!(top_n >= 1, "top_n must be at least 1");
    let mut counts: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for instruction in instructions {
        if let Some(token) = leading_token(instruction) {
            if lexicon.contains(&token) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
    }
    let mut histogram: Vec<VerbCount> = counts
        .into_iter()
        .map(|(verb, count)| VerbCount { verb, count })
        .collect();
    histogram.sort_by(|a, b| b.count.cmp(&a.count).then(a.verb.cmp(&b.verb)));
    histogram.truncate(top_n);
    histogram
}

/// Aligned-column plain text rendering of a verb histogram.
pub fn verbs_to_text(histogram: &[VerbCount]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<16} {:>8}\n", "Verb", "Count"));
    for entry in histogram {
        out.push_str(&format!("{:<16} {:>8}\n", entry.verb, entry.count));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_counted_example() {
        let instructions = strings(&["Write a poem", "write code", "Explain X"]);
        let histogram = verb_frequency(&instructions, 2, &VerbLexicon::default());
        assert_eq!(
            histogram,
            vec![
                VerbCount {
                    verb: "write".into(),
                    count: 2
                },
                VerbCount {
                    verb: "explain".into(),
                    count: 1
                },
            ]
        );
    }

    #[test]
    fn non_lexicon_leading_token_is_excluded() {
        let instructions = strings(&["Foozle the widget", "Write a haiku"]);
        let histogram = verb_frequency(&instructions, 10, &VerbLexicon::default());
        assert_eq!(histogram.len(), 1);
        assert_eq!(histogram[0].verb, "write");
    }

    #[test]
    fn top_n_larger_than_distinct_verbs_returns_all() {
        let instructions = strings(&["Write a", "Explain b", "List c"]);
        let histogram = verb_frequency(&instructions, 99, &VerbLexicon::default());
        assert_eq!(histogram.len(), 3);
    }

    #[test]
    fn ties_break_alphabetically() {
        let instructions = strings(&["Write a", "Explain b"]);
        let histogram = verb_frequency(&instructions, 2, &VerbLexicon::default());
        assert_eq!(histogram[0].verb, "explain");
        assert_eq!(histogram[1].verb, "write");
    }

    #[test]
    fn punctuation_and_case_are_normalized() {
        let instructions = strings(&["  \"Write:\" something", "WRITE now"]);
        let histogram = verb_frequency(&instructions, 1, &VerbLexicon::default());
        assert_eq!(histogram[0].count, 2);
    }

    #[test]
    fn lexicon_file_round_trip() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write;
        writeln!(file, "# verbs").unwrap();
        writeln!(file, "foozle").unwrap();
        let lexicon = VerbLexicon::from_file(file.path()).unwrap();
        assert!(lexicon.contains("foozle"));
        assert_eq!(lexicon.len(), 1);

        let instructions = strings(&["Foozle the widget"]);
        let histogram = verb_frequency(&instructions, 5, &lexicon);
        assert_eq!(histogram[0].verb, "foozle");
    }
}
