//! Text analysis: lowercase, split on non-alphanumeric runs, drop stopwords,
//! stem.

use std::collections::BTreeSet;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

/// Bundled English stopword list (the classic Lucene English set).
pub const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub stem: bool,
    pub stopwords: BTreeSet<String>,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stem: true,
            stopwords: ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl AnalyzerConfig {
    /// Lowercasing only: no stopwords, no stemming.
    pub fn plain() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stem: false,
            stopwords: BTreeSet::new(),
        }
    }
}

/// Splits `text` into analyzed terms under `config`.
///
/// Tokens are maximal runs of alphanumeric characters. Stopwords are matched
/// against the lowercased surface form, before stemming.
pub fn tokenize(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    let stemmer = config.stem.then(|| Stemmer::create(Algorithm::English));
    let normalized;
    let text = if config.lowercase {
        normalized = text.to_lowercase();
        normalized.as_str()
    } else {
        text
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .filter(|tok| !config.stopwords.contains(*tok))
        .map(|tok| match &stemmer {
            Some(s) => s.stem(tok).into_owned(),
            None => tok.to_string(),
        })
        .collect()
}
