#![allow(dead_code)]

use rankex::analysis::AnalyzerConfig;
use rankex::index::{Document, PositionalIndex};
use rankex::synthetic::{generate_corpus, CorpusSpec};

/// Index over `(docid, text)` pairs with lowercasing only, so test texts
/// map one word to one token.
pub fn plain_index(docs: &[(&str, &str)]) -> PositionalIndex {
    let corpus: Vec<Document> = docs
        .iter()
        .map(|(id, text)| Document::new(*id, *text))
        .collect();
    PositionalIndex::build(&corpus, &AnalyzerConfig::plain()).unwrap()
}

pub fn generated_index(spec: &CorpusSpec, seed: u64) -> PositionalIndex {
    PositionalIndex::build(&generate_corpus(spec, seed), &AnalyzerConfig::plain()).unwrap()
}

pub fn small_spec(n_docs: usize, vocab_size: usize) -> CorpusSpec {
    CorpusSpec {
        n_docs,
        vocab_size,
        min_len: 4,
        max_len: 16,
        zipf: 0.5,
    }
}
