//! Sparse scoring models, the black-box ranker abstraction, and ranking.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::index::{PositionalIndex, TermBag};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub qid: String,
    pub text: String,
    /// Analyzed terms, in query order, duplicates kept.
    pub terms: Vec<String>,
}

impl Query {
    pub fn new(qid: impl Into<String>, text: impl Into<String>, index: &PositionalIndex) -> Self {
        let text = text.into();
        let terms = index.analyze(&text);
        Query {
            qid: qid.into(),
            text,
            terms,
        }
    }

    /// Unit-weight scoring form of the query.
    pub fn weighted(&self) -> Vec<WeightedTerm> {
        self.terms.iter().map(WeightedTerm::unit).collect()
    }

    /// Distinct analyzed terms in first-occurrence order.
    pub fn distinct_terms(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.terms
            .iter()
            .filter(|t| seen.insert(t.as_str()))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: String,
    pub weight: f64,
}

impl WeightedTerm {
    pub fn new(term: impl Into<String>, weight: f64) -> Self {
        WeightedTerm {
            term: term.into(),
            weight,
        }
    }

    pub fn unit(term: impl Into<String>) -> Self {
        Self::new(term, 1.0)
    }
}

/// A scoring function over (query, document).
///
/// Documents are passed as [`TermBag`]s so that the same function scores
/// indexed documents and transient perturbed ones; collection statistics
/// always come from `index`.
pub trait Ranker: Send + Sync {
    fn name(&self) -> String;

    fn score_bag(&self, index: &PositionalIndex, query: &[WeightedTerm], doc: &TermBag) -> f64;

    fn score(&self, index: &PositionalIndex, query: &[WeightedTerm], docid: &str) -> Result<f64> {
        Ok(self.score_bag(index, query, index.bag(docid)?))
    }
}

impl<R: Ranker + ?Sized> Ranker for Arc<R> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn score_bag(&self, index: &PositionalIndex, query: &[WeightedTerm], doc: &TermBag) -> f64 {
        (**self).score_bag(index, query, doc)
    }
}

impl<R: Ranker + ?Sized> Ranker for Box<R> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn score_bag(&self, index: &PositionalIndex, query: &[WeightedTerm], doc: &TermBag) -> f64 {
        (**self).score_bag(index, query, doc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25 {
    fn default() -> Self {
        Bm25 { k1: 0.9, b: 0.4 }
    }
}

impl Bm25 {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1 >= 0.0 && k1.is_finite()) || !(0.0..=1.0).contains(&b) {
            return Err(Error::param(format!(
                "bm25 needs k1 >= 0 and b in [0,1], got k1={k1} b={b}"
            )));
        }
        Ok(Bm25 { k1, b })
    }
}

impl Ranker for Bm25 {
    fn name(&self) -> String {
        "BM25".into()
    }

    fn score_bag(&self, index: &PositionalIndex, query: &[WeightedTerm], doc: &TermBag) -> f64 {
        let avgdl = index.avgdl();
        let norm = if avgdl > 0.0 {
            1.0 - self.b + self.b * doc.len() as f64 / avgdl
        } else {
            1.0
        };
        query
            .iter()
            .map(|q| {
                let tf = doc.tf(&q.term) as f64;
                if tf == 0.0 {
                    return 0.0;
                }
                q.weight * index.idf(&q.term) * tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
            })
            .sum()
    }
}

/// Query likelihood with Jelinek-Mercer smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmJm {
    pub lambda: f64,
}

impl Default for LmJm {
    fn default() -> Self {
        LmJm { lambda: 0.1 }
    }
}

impl LmJm {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::param(format!(
                "lmjm lambda must lie in (0,1), got {lambda}"
            )));
        }
        Ok(LmJm { lambda })
    }

    /// `P(t|D) = (1-λ)·tf/dl + λ·cf/|C|`.
    pub fn term_probability(&self, index: &PositionalIndex, term: &str, doc: &TermBag) -> f64 {
        let background = index.cf(term) as f64 / index.collection_len().max(1) as f64;
        let foreground = if doc.is_empty() {
            0.0
        } else {
            doc.tf(term) as f64 / doc.len() as f64
        };
        (1.0 - self.lambda) * foreground + self.lambda * background
    }
}

impl Ranker for LmJm {
    fn name(&self) -> String {
        "LMJM".into()
    }

    fn score_bag(&self, index: &PositionalIndex, query: &[WeightedTerm], doc: &TermBag) -> f64 {
        query
            .iter()
            .filter(|q| index.cf(&q.term) > 0)
            .map(|q| q.weight * self.term_probability(index, &q.term, doc).ln())
            .sum()
    }
}

/// Query likelihood with Dirichlet prior smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmDir {
    pub mu: f64,
}

impl Default for LmDir {
    fn default() -> Self {
        LmDir { mu: 1000.0 }
    }
}

impl LmDir {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param(format!("lmdir mu must be > 0, got {mu}")));
        }
        Ok(LmDir { mu })
    }
}

impl Ranker for LmDir {
    fn name(&self) -> String {
        "LMDir".into()
    }

    fn score_bag(&self, index: &PositionalIndex, query: &[WeightedTerm], doc: &TermBag) -> f64 {
        let clen = index.collection_len().max(1) as f64;
        query
            .iter()
            .filter(|q| index.cf(&q.term) > 0)
            .map(|q| {
                let background = index.cf(&q.term) as f64 / clen;
                let p =
                    (doc.tf(&q.term) as f64 + self.mu * background) / (doc.len() as f64 + self.mu);
                q.weight * p.ln()
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerParams {
    pub k1: f64,
    pub b: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl Default for RankerParams {
    fn default() -> Self {
        let bm25 = Bm25::default();
        RankerParams {
            k1: bm25.k1,
            b: bm25.b,
            lambda: LmJm::default().lambda,
            mu: LmDir::default().mu,
        }
    }
}

/// The interpretable models available as explanation surrogates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SimpleRankerKind {
    #[serde(rename = "bm25")]
    Bm25,
    #[serde(rename = "lmjm")]
    LmJm,
    #[serde(rename = "lmdir")]
    LmDir,
}

impl SimpleRankerKind {
    pub const ALL: [SimpleRankerKind; 3] = [Self::Bm25, Self::LmJm, Self::LmDir];
    const NAMES: [&'static str; 3] = ["bm25", "lmjm", "lmdir"];

    pub fn build(self, params: &RankerParams) -> Result<Arc<dyn Ranker>> {
        Ok(match self {
            Self::Bm25 => Arc::new(Bm25::new(params.k1, params.b)?),
            Self::LmJm => Arc::new(LmJm::new(params.lambda)?),
            Self::LmDir => Arc::new(LmDir::new(params.mu)?),
        })
    }

    pub fn as_str(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

impl fmt::Display for SimpleRankerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimpleRankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bm25" => Ok(Self::Bm25),
            "lmjm" => Ok(Self::LmJm),
            "lmdir" => Ok(Self::LmDir),
            _ => Err(Error::unknown_name("ranker", s, &Self::NAMES)),
        }
    }
}

/// A black box that scores `query ∪ hidden terms` with a base model.
///
/// Stands in for a learned ranker whose behavior is known to the experimenter
/// but not to the explainer: the hidden terms cannot be read back.
pub struct HiddenIntentRanker {
    base: Arc<dyn Ranker>,
    hidden: Vec<WeightedTerm>,
}

impl HiddenIntentRanker {
    pub fn new(base: Arc<dyn Ranker>, hidden: Vec<WeightedTerm>) -> Result<Self> {
        if let Some(bad) = hidden.iter().find(|h| !(h.weight > 0.0)) {
            return Err(Error::param(format!(
                "hidden term `{}` needs a positive weight, got {}",
                bad.term, bad.weight
            )));
        }
        Ok(HiddenIntentRanker { base, hidden })
    }
}

impl Ranker for HiddenIntentRanker {
    fn name(&self) -> String {
        format!("hidden-intent({})", self.base.name())
    }

    fn score_bag(&self, index: &PositionalIndex, query: &[WeightedTerm], doc: &TermBag) -> f64 {
        let mut expanded = query.to_vec();
        expanded.extend(self.hidden.iter().cloned());
        self.base.score_bag(index, &expanded, doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub docid: String,
    pub rank: u32,
    pub score: f64,
}

/// One query's ranking: ranks `1..=n` without gaps, scores non-increasing,
/// docids unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub qid: String,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn new(qid: impl Into<String>, entries: Vec<RankedEntry>) -> Result<Self> {
        let qid = qid.into();
        let mut seen = HashSet::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.rank as usize != i + 1 {
                return Err(Error::contract(format!(
                    "qid {qid}: expected rank {} but found {} for {}",
                    i + 1,
                    e.rank,
                    e.docid
                )));
            }
            if !seen.insert(e.docid.as_str()) {
                return Err(Error::contract(format!(
                    "qid {qid}: duplicate docid {}",
                    e.docid
                )));
            }
            if i > 0 && e.score > entries[i - 1].score {
                return Err(Error::contract(format!(
                    "qid {qid}: score increases at rank {}",
                    e.rank
                )));
            }
        }
        Ok(RankedList { qid, entries })
    }

    /// Builds a list from docids in rank order with synthetic descending scores.
    pub fn from_docids<S: AsRef<str>>(qid: impl Into<String>, docids: &[S]) -> Result<Self> {
        let n = docids.len();
        let entries = docids
            .iter()
            .enumerate()
            .map(|(i, d)| RankedEntry {
                docid: d.as_ref().to_string(),
                rank: i as u32 + 1,
                score: (n - i) as f64,
            })
            .collect();
        Self::new(qid, entries)
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn docids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.docid.as_str()).collect()
    }

    pub fn truncated(&self, depth: usize) -> RankedList {
        RankedList {
            qid: self.qid.clone(),
            entries: self.entries.iter().take(depth).cloned().collect(),
        }
    }
}

/// Scores and sorts documents for `query`.
///
/// With a `pool`, exactly those documents are scored; otherwise every
/// document containing at least one query term. Ties go to the smaller docid.
pub fn rank(
    index: &PositionalIndex,
    ranker: &dyn Ranker,
    qid: &str,
    query: &[WeightedTerm],
    pool: Option<&[&str]>,
    depth: usize,
) -> Result<RankedList> {
    if depth == 0 {
        return Err(Error::param("rank depth must be >= 1"));
    }
    let candidates: Vec<&str> = match pool {
        Some(pool) => {
            let unique: Vec<&str> = pool
                .iter()
                .copied()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if let Some(d) = unique.iter().find(|d| !index.contains(d)) {
                return Err(Error::UnknownDocid(d.to_string()));
            }
            unique
        }
        None => {
            let mut ordinals = BTreeSet::new();
            for q in query.iter().filter(|q| q.weight != 0.0) {
                ordinals.extend(index.postings(&q.term).iter().map(|p| p.doc));
            }
            ordinals.into_iter().map(|o| index.docid(o)).collect()
        }
    };

    let mut scored: Vec<(&str, f64)> = candidates
        .into_iter()
        .map(|d| Ok((d, ranker.score(index, query, d)?)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    scored.truncate(depth);

    let entries = scored
        .into_iter()
        .enumerate()
        .map(|(i, (d, s))| RankedEntry {
            docid: d.to_string(),
            rank: i as u32 + 1,
            score: s,
        })
        .collect();
    Ok(RankedList {
        qid: qid.to_string(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalyzerConfig;
    use crate::index::Document;

    fn index(docs: &[(&str, &str)]) -> PositionalIndex {
        let corpus: Vec<_> = docs.iter().map(|(id, t)| Document::new(*id, *t)).collect();
        PositionalIndex::build(&corpus, &AnalyzerConfig::plain()).unwrap()
    }

    fn q(terms: &[&str]) -> Vec<WeightedTerm> {
        terms.iter().map(|t| WeightedTerm::unit(*t)).collect()
    }

    #[test]
    fn bm25_hand_value() {
        let idx = index(&[("D1", "cat cat dog"), ("D2", "dog mouse")]);
        let bm25 = Bm25::new(1.2, 0.75).unwrap();
        // idf = ln 2, tf = 2, dl/avgdl = 3/2.5
        let expected = 2f64.ln() * 2.0 * 2.2 / (2.0 + 1.2 * (0.25 + 0.75 * 1.2));
        let got = bm25.score(&idx, &q(&["cat"]), "D1").unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.902).abs() < 5e-4);
        assert_eq!(bm25.score(&idx, &[], "D1").unwrap(), 0.0);
    }

    #[test]
    fn bm25_symmetric_for_equal_docs() {
        let idx = index(&[("D1", "x y"), ("D2", "x z")]);
        let bm25 = Bm25::default();
        let a = bm25.score(&idx, &q(&["x"]), "D1").unwrap();
        let b = bm25.score(&idx, &q(&["x"]), "D2").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lmjm_hand_value() {
        // |C| = 5; cf(a) = 3
        let idx = index(&[("D1", "a a b"), ("D2", "a c")]);
        let lm = LmJm::new(0.5).unwrap();
        let expected = (0.5 * 2.0 / 3.0 + 0.5 * 3.0 / 5.0f64).ln();
        let got = lm.score(&idx, &q(&["a"]), "D1").unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn lmdir_hand_value() {
        let idx = index(&[("D1", "a a b"), ("D2", "a c")]);
        let lm = LmDir::new(2.0).unwrap();
        let expected = ((2.0 + 2.0 * 0.6) / (3.0 + 2.0f64)).ln();
        let got = lm.score(&idx, &q(&["a"]), "D1").unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn lm_skips_oov_terms() {
        let idx = index(&[("D1", "a a b"), ("D2", "a c")]);
        for r in [&LmJm::default() as &dyn Ranker, &LmDir::default()] {
            let base = r.score(&idx, &q(&["a"]), "D1").unwrap();
            let with_oov = r.score(&idx, &q(&["a", "unseen"]), "D1").unwrap();
            assert_eq!(base, with_oov);
        }
    }

    #[test]
    fn lm_parameter_errors() {
        assert!(LmJm::new(0.0).is_err());
        assert!(LmJm::new(1.0).is_err());
        assert!(LmDir::new(0.0).is_err());
        assert!(LmDir::new(-3.0).is_err());
    }

    #[test]
    fn rank_ties_break_by_docid() {
        let idx = index(&[("b", "x"), ("a", "x"), ("c", "y")]);
        let list = rank(&idx, &Bm25::default(), "q", &q(&["x"]), None, 10).unwrap();
        assert_eq!(list.docids(), vec!["a", "b"]);
    }

    #[test]
    fn rank_with_single_doc_pool() {
        let idx = index(&[("D1", "cat cat dog"), ("D2", "dog mouse")]);
        let list = rank(&idx, &Bm25::default(), "q", &q(&["cat"]), Some(&["D2"]), 10).unwrap();
        assert_eq!(list.docids(), vec!["D2"]);
        assert_eq!(list.entries()[0].rank, 1);
    }

    #[test]
    fn rank_puts_matching_doc_first() {
        let idx = index(&[("D1", "cat cat dog"), ("D2", "dog mouse")]);
        let bm25 = Bm25::new(1.2, 0.75).unwrap();
        let list = rank(&idx, &bm25, "q", &q(&["cat"]), Some(&["D1", "D2"]), 10).unwrap();
        assert_eq!(list.docids(), vec!["D1", "D2"]);
    }

    #[test]
    fn empty_candidate_set_gives_empty_list() {
        let idx = index(&[("D1", "cat")]);
        let list = rank(&idx, &Bm25::default(), "q", &q(&["zebra"]), None, 10).unwrap();
        assert!(list.is_empty());
    }

    #[test]
    fn hidden_intent_identity_and_boost() {
        let idx = index(&[("D1", "thai sanuk life"), ("D2", "thai food")]);
        let base: Arc<dyn Ranker> = Arc::new(Bm25::default());
        let same = HiddenIntentRanker::new(base.clone(), vec![]).unwrap();
        let boosted =
            HiddenIntentRanker::new(base.clone(), vec![WeightedTerm::new("sanuk", 2.0)]).unwrap();
        let query = q(&["thai"]);
        for d in ["D1", "D2"] {
            assert_eq!(
                same.score(&idx, &query, d).unwrap(),
                base.score(&idx, &query, d).unwrap()
            );
        }
        assert_eq!(
            boosted.score(&idx, &query, "D2").unwrap(),
            base.score(&idx, &query, "D2").unwrap()
        );
        assert!(
            boosted.score(&idx, &query, "D1").unwrap() > base.score(&idx, &query, "D1").unwrap()
        );
        assert!(HiddenIntentRanker::new(base, vec![WeightedTerm::new("x", 0.0)]).is_err());
    }

    #[test]
    fn ranked_list_invariants() {
        let e = |d: &str, r, s| RankedEntry {
            docid: d.into(),
            rank: r,
            score: s,
        };
        assert!(RankedList::new("q", vec![e("a", 1, 2.0), e("b", 3, 1.0)]).is_err());
        assert!(RankedList::new("q", vec![e("a", 1, 2.0), e("a", 2, 1.0)]).is_err());
        assert!(RankedList::new("q", vec![e("a", 1, 1.0), e("b", 2, 2.0)]).is_err());
        assert!(RankedList::new("q", vec![e("a", 1, 2.0), e("b", 2, 2.0)]).is_ok());
    }
}
