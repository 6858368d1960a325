//! Generated corpora and synthetic black boxes with known behavior, for
//! experiments where the ground truth of an explanation must be known.

use std::collections::BTreeMap;

use crate::index::{Document, PositionalIndex, TermBag};
use crate::rankers::{Ranker, WeightedTerm};
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSpec {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Zipf exponent of the term distribution; 0 gives uniform sampling.
    pub zipf: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            n_docs: 50,
            vocab_size: 200,
            min_len: 20,
            max_len: 40,
            zipf: 1.0,
        }
    }
}

/// Vocabulary word for rank `i`: `t000`, `t001`, … (stable under analysis).
pub fn vocab_word(i: usize) -> String {
    format!("t{i:03}")
}

/// Documents `d00`, `d01`, … whose words are drawn i.i.d. from a Zipf law
/// over the vocabulary.
pub fn generate_corpus(spec: &CorpusSpec, seed: u64) -> Vec<Document> {
    let mut rng = XorShift64Star::new(seed);
    let weights: Vec<f64> = (0..spec.vocab_size)
        .map(|r| 1.0 / ((r + 1) as f64).powf(spec.zipf))
        .collect();
    let total: f64 = weights.iter().sum();
    let cdf: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();
    let width = spec.n_docs.saturating_sub(1).to_string().len().max(2);
    (0..spec.n_docs)
        .map(|d| {
            let len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    let u = rng.next_f64();
                    let r = cdf.partition_point(|&c| c < u).min(spec.vocab_size - 1);
                    vocab_word(r)
                })
                .collect();
            Document::new(format!("d{d:0width$}"), words.join(" "))
        })
        .collect()
}

/// Query-independent black box `score(D) = Σ_t c_t · tf(t, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub coefficients: BTreeMap<String, f64>,
}

impl LinearScorer {
    pub fn new(coefficients: BTreeMap<String, f64>) -> Self {
        LinearScorer { coefficients }
    }

    /// Ground-truth contribution `c_t · tf(t, D)` of every term of `doc`.
    pub fn contributions(&self, doc: &TermBag) -> BTreeMap<String, f64> {
        doc.iter()
            .map(|(t, tf)| {
                (
                    t.to_string(),
                    self.coefficients.get(t).copied().unwrap_or(0.0) * tf as f64,
                )
            })
            .collect()
    }

    /// The `k` largest contributions by magnitude, ties broken by term.
    pub fn top_contributions(&self, doc: &TermBag, k: usize) -> Vec<(String, f64)> {
        let mut all: Vec<(String, f64)> = self.contributions(doc).into_iter().collect();
        all.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }
}

/// Linear scorer whose contributions on `doc` are `±ratio^-j`, with `j` the
/// position of the term in a random order and a random sign. Terms outside
/// `doc` get coefficient 0.
pub fn separated_linear_scorer(
    doc: &TermBag,
    ratio: f64,
    rng: &mut XorShift64Star,
) -> LinearScorer {
    let mut terms: Vec<(&str, u32)> = doc.iter().collect();
    rng.shuffle(&mut terms);
    let coefficients = terms
        .into_iter()
        .enumerate()
        .map(|(j, (t, tf))| {
            let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
            (t.to_string(), sign * ratio.powi(-(j as i32)) / tf as f64)
        })
        .collect();
    LinearScorer::new(coefficients)
}

impl Ranker for LinearScorer {
    fn name(&self) -> String {
        "linear".into()
    }

    fn score_bag(&self, _index: &PositionalIndex, _query: &[WeightedTerm], doc: &TermBag) -> f64 {
        doc.iter()
            .map(|(t, tf)| self.coefficients.get(t).copied().unwrap_or(0.0) * tf as f64)
            .sum()
    }
}
