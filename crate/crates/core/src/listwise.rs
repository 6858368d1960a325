//! Listwise explanations: an expanded query that lets a simple ranker
//! reproduce a black box's ranked list.
//!
//! Two families are provided. Multiplex and IntentEXS decompose the list into
//! sampled preference pairs and pick expansion terms that agree with as many
//! pairs as possible (greedy maximum coverage over a term × pair preference
//! matrix). Greedy and BFS search term sets directly, scoring each candidate
//! expansion by the rank-biased overlap between the simple ranker's
//! re-ranking of the list and the list itself.
//!
//! The expanded query is always the original query terms plus the selected
//! terms, all with unit weight, and re-ranking is confined to the documents
//! of the explained list.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluation::rbo;
use crate::index::PositionalIndex;
use crate::rankers::{
    rank, Query, RankedList, Ranker, RankerParams, SimpleRankerKind, WeightedTerm,
};
use crate::rng::XorShift64Star;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTerm {
    pub term: String,
    /// Aggregate tf·idf over the top documents of the list.
    pub salience: f64,
}

impl CandidateTerm {
    pub fn new(term: impl Into<String>, salience: f64) -> Self {
        CandidateTerm {
            term: term.into(),
            salience,
        }
    }
}

/// Higher salience first, then lexicographic.
fn candidate_order(a: &CandidateTerm, b: &CandidateTerm) -> Ordering {
    b.salience
        .total_cmp(&a.salience)
        .then_with(|| a.term.cmp(&b.term))
}

/// Distinct terms of the `top_k` documents of `list`, ranked by
/// `Σ_D tf(t, D)·idf(t)`, truncated to `n_candidates`. Query terms are kept.
pub fn generate_candidates(
    index: &PositionalIndex,
    list: &RankedList,
    top_k: usize,
    n_candidates: usize,
) -> Result<Vec<CandidateTerm>> {
    if list.is_empty() {
        return Err(Error::contract(
            "cannot generate candidates from an empty list",
        ));
    }
    if top_k == 0 || top_k > list.len() {
        return Err(Error::param(format!(
            "top_k must lie in 1..={}, got {top_k}",
            list.len()
        )));
    }
    let mut salience: BTreeMap<&str, f64> = BTreeMap::new();
    for docid in list.docids().into_iter().take(top_k) {
        for (term, tf) in index.bag(docid)?.iter() {
            *salience.entry(term).or_insert(0.0) += tf as f64 * index.idf(term);
        }
    }
    let mut out: Vec<CandidateTerm> = salience
        .into_iter()
        .map(|(t, s)| CandidateTerm::new(t, s))
        .collect();
    out.sort_by(candidate_order);
    out.truncate(n_candidates);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreferencePair {
    pub upper: String,
    pub lower: String,
    pub rank_gap: u32,
}

impl fmt::Display for PreferencePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.upper, self.lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStrategy {
    /// Uniform over all ordered pairs.
    Uniform,
    /// Probability proportional to the rank gap.
    RankGapWeighted,
    /// Upper document from the top tenth of the list.
    TopVsRest,
}

impl PairStrategy {
    const NAMES: [&'static str; 3] = ["uniform", "rank_gap_weighted", "top_vs_rest"];
}

impl fmt::Display for PairStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Self::NAMES[*self as usize])
    }
}

impl FromStr for PairStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "rank_gap_weighted" => Ok(Self::RankGapWeighted),
            "top_vs_rest" => Ok(Self::TopVsRest),
            _ => Err(Error::unknown_name("pair strategy", s, &Self::NAMES)),
        }
    }
}

/// Samples `min(count, available)` distinct preference pairs from `list`
/// without replacement. Output is ordered by (upper rank, lower rank).
pub fn sample_pairs(
    list: &RankedList,
    strategy: PairStrategy,
    count: usize,
    rng: &mut XorShift64Star,
) -> Result<Vec<PreferencePair>> {
    let n = list.len();
    if n < 2 {
        return Err(Error::contract(
            "no pairs: the list has fewer than 2 documents",
        ));
    }
    if count == 0 {
        return Err(Error::param("pair count must be >= 1"));
    }
    let upper_limit = match strategy {
        PairStrategy::TopVsRest => n.div_ceil(10),
        _ => n - 1,
    };
    let mut pool: Vec<(usize, usize)> = (0..upper_limit)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();

    let mut chosen: Vec<(usize, usize)> = match strategy {
        PairStrategy::Uniform | PairStrategy::TopVsRest => {
            rng.shuffle(&mut pool);
            pool.truncate(count);
            pool
        }
        PairStrategy::RankGapWeighted => {
            let mut picked = Vec::with_capacity(count.min(pool.len()));
            let mut total: u64 = pool.iter().map(|(i, j)| (j - i) as u64).sum();
            while picked.len() < count && !pool.is_empty() {
                let mut target = rng.next_f64() * total as f64;
                let mut at = pool.len() - 1;
                for (k, (i, j)) in pool.iter().enumerate() {
                    target -= (j - i) as f64;
                    if target < 0.0 {
                        at = k;
                        break;
                    }
                }
                let pair = pool.swap_remove(at);
                total -= (pair.1 - pair.0) as u64;
                picked.push(pair);
            }
            picked
        }
    };
    chosen.sort_unstable();
    let entries = list.entries();
    Ok(chosen
        .into_iter()
        .map(|(i, j)| PreferencePair {
            upper: entries[i].docid.clone(),
            lower: entries[j].docid.clone(),
            rank_gap: (j - i) as u32,
        })
        .collect())
}

/// Candidate term × preference pair agreement, per simple ranker.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    rankers: Vec<SimpleRankerKind>,
    terms: Vec<CandidateTerm>,
    pairs: Vec<PreferencePair>,
    /// `layers[r][t][p]`.
    layers: Vec<Vec<Vec<i8>>>,
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Scores every candidate as a one-term query against both documents of
/// every pair; an entry is the sign of `score(upper) − score(lower)`.
pub fn build_preference_matrix(
    index: &PositionalIndex,
    rankers: &[SimpleRankerKind],
    params: &RankerParams,
    candidates: &[CandidateTerm],
    pairs: &[PreferencePair],
) -> Result<PreferenceMatrix> {
    if rankers.is_empty() || candidates.is_empty() || pairs.is_empty() {
        return Err(Error::contract(
            "preference matrix needs rankers, candidates and pairs",
        ));
    }
    let mut layers = Vec::with_capacity(rankers.len());
    for kind in rankers {
        let model = kind.build(params)?;
        let mut layer = Vec::with_capacity(candidates.len());
        for c in candidates {
            let q = [WeightedTerm::unit(c.term.clone())];
            let row = pairs
                .iter()
                .map(|p| {
                    Ok(sign(
                        model.score(index, &q, &p.upper)? - model.score(index, &q, &p.lower)?,
                    ))
                })
                .collect::<Result<Vec<i8>>>()?;
            layer.push(row);
        }
        layers.push(layer);
    }
    PreferenceMatrix::from_layers(
        rankers.to_vec(),
        candidates.to_vec(),
        pairs.to_vec(),
        layers,
    )
}

impl PreferenceMatrix {
    pub fn from_layers(
        rankers: Vec<SimpleRankerKind>,
        terms: Vec<CandidateTerm>,
        pairs: Vec<PreferencePair>,
        layers: Vec<Vec<Vec<i8>>>,
    ) -> Result<Self> {
        let shape_ok = layers.len() == rankers.len()
            && layers
                .iter()
                .all(|l| l.len() == terms.len() && l.iter().all(|r| r.len() == pairs.len()));
        if !shape_ok {
            return Err(Error::contract("preference matrix dimensions do not match"));
        }
        if layers
            .iter()
            .flatten()
            .flatten()
            .any(|v| !(-1..=1).contains(v))
        {
            return Err(Error::contract("preference entries must be -1, 0 or 1"));
        }
        Ok(PreferenceMatrix {
            rankers,
            terms,
            pairs,
            layers,
        })
    }

    pub fn rankers(&self) -> &[SimpleRankerKind] {
        &self.rankers
    }

    pub fn terms(&self) -> &[CandidateTerm] {
        &self.terms
    }

    pub fn pairs(&self) -> &[PreferencePair] {
        &self.pairs
    }

    pub fn entry(&self, ranker: usize, term: usize, pair: usize) -> i8 {
        self.layers[ranker][term][pair]
    }

    /// Sign of the sum of the per-ranker entries.
    pub fn consensus(&self, term: usize, pair: usize) -> i8 {
        let sum: i32 = self.layers.iter().map(|l| l[term][pair] as i32).sum();
        sum.signum() as i8
    }

    pub fn consensus_layer(&self) -> Vec<Vec<i8>> {
        (0..self.terms.len())
            .map(|t| {
                (0..self.pairs.len())
                    .map(|p| self.consensus(t, p))
                    .collect()
            })
            .collect()
    }

    /// The single-ranker matrix for `kind`.
    pub fn restrict(&self, kind: SimpleRankerKind) -> Result<PreferenceMatrix> {
        let r = self
            .rankers
            .iter()
            .position(|&k| k == kind)
            .ok_or_else(|| Error::contract(format!("ranker {kind} is not part of the matrix")))?;
        Ok(PreferenceMatrix {
            rankers: vec![kind],
            terms: self.terms.clone(),
            pairs: self.pairs.clone(),
            layers: vec![self.layers[r].clone()],
        })
    }

    fn pair_index(&self, pair: &PreferencePair) -> Result<usize> {
        self.pairs
            .iter()
            .position(|p| p.upper == pair.upper && p.lower == pair.lower)
            .ok_or_else(|| Error::contract(format!("pair {pair} is not in the matrix")))
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            rankers: self.rankers.clone(),
            pairs: self.pairs.clone(),
            terms: self.terms.iter().map(|c| c.term.clone()).collect(),
            salience: self.terms.iter().map(|c| c.salience).collect(),
            entries: self.consensus_layer(),
            layers: self.layers.clone(),
        }
    }

    pub fn from_json(json: MatrixJson) -> Result<Self> {
        if json.terms.len() != json.salience.len() {
            return Err(Error::contract("terms and salience differ in length"));
        }
        let terms = json
            .terms
            .into_iter()
            .zip(json.salience)
            .map(|(t, s)| CandidateTerm::new(t, s))
            .collect();
        let matrix = Self::from_layers(json.rankers, terms, json.pairs, json.layers)?;
        if matrix.consensus_layer() != json.entries {
            return Err(Error::contract(
                "entries disagree with the per-ranker layers",
            ));
        }
        Ok(matrix)
    }
}

/// Serialized matrix: `entries` holds the consensus layer, `layers` the
/// per-ranker entries in `rankers` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rankers: Vec<SimpleRankerKind>,
    pub pairs: Vec<PreferencePair>,
    pub terms: Vec<String>,
    pub salience: Vec<f64>,
    pub entries: Vec<Vec<i8>>,
    pub layers: Vec<Vec<Vec<i8>>>,
}

fn stance(v: i8) -> char {
    match v {
        1 => '+',
        -1 => '-',
        _ => '0',
    }
}

/// Plain-text view of the consensus grid (terms × pairs). With a pair
/// filter, a single column listing every term's stance on that pair under
/// each ranker and in consensus.
pub fn show_matrix(
    matrix: &PreferenceMatrix,
    pair_filter: Option<&PreferencePair>,
) -> Result<String> {
    let tw = matrix
        .terms
        .iter()
        .map(|c| c.term.chars().count())
        .max()
        .unwrap_or(0)
        .max(4);
    let mut out = String::new();
    match pair_filter {
        Some(pair) => {
            let p = matrix.pair_index(pair)?;
            let mut header: Vec<String> = matrix.rankers.iter().map(|r| r.to_string()).collect();
            header.push("consensus".into());
            writeln!(out, "pair {}", matrix.pairs[p]).unwrap();
            write!(out, "{:<tw$}", "term").unwrap();
            for h in &header {
                write!(out, "  {h:>9}").unwrap();
            }
            out.push('\n');
            for (t, c) in matrix.terms.iter().enumerate() {
                write!(out, "{:<tw$}", c.term).unwrap();
                for r in 0..matrix.rankers.len() {
                    write!(out, "  {:>9}", stance(matrix.entry(r, t, p))).unwrap();
                }
                writeln!(out, "  {:>9}", stance(matrix.consensus(t, p))).unwrap();
            }
        }
        None => {
            let labels: Vec<String> = matrix.pairs.iter().map(|p| p.to_string()).collect();
            write!(out, "{:<tw$}", "term").unwrap();
            for l in &labels {
                write!(out, "  {l}").unwrap();
            }
            out.push('\n');
            for (t, c) in matrix.terms.iter().enumerate() {
                write!(out, "{:<tw$}", c.term).unwrap();
                for (p, l) in labels.iter().enumerate() {
                    write!(
                        out,
                        "  {:>w$}",
                        stance(matrix.consensus(t, p)),
                        w = l.chars().count()
                    )
                    .unwrap();
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListwiseExplanation {
    pub qid: String,
    pub method: String,
    /// Expansion terms in selection order.
    pub terms: Vec<String>,
    pub fidelity: BTreeMap<String, f64>,
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    /// Objective value after each accepted step (greedy searches only).
    #[serde(skip)]
    pub trace: Vec<f64>,
}

pub fn rbo_key(p: f64) -> String {
    format!("rbo@{p}")
}

/// Number of pairs whose summed entries over `selected` are positive.
fn coverage(layer: &[Vec<i8>], selected: &[usize], pairs: usize) -> usize {
    (0..pairs)
        .filter(|&p| selected.iter().map(|&t| layer[t][p] as i32).sum::<i32>() > 0)
        .count()
}

/// Greedy maximum coverage with the salience/lexicographic tie rule. Adds
/// terms until `m_max`, or until the best marginal gain is not positive once
/// `m_min` terms are in.
fn greedy_coverage(
    layer: &[Vec<i8>],
    candidates: &[CandidateTerm],
    pairs: usize,
    m_min: usize,
    m_max: usize,
    method: &str,
) -> Result<ListwiseExplanation> {
    if candidates.is_empty() || pairs == 0 {
        return Err(Error::contract("empty preference matrix"));
    }
    if m_min > m_max {
        return Err(Error::param(format!("m_min {m_min} exceeds m_max {m_max}")));
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut covered = 0usize;
    let mut evaluations = 0usize;
    let mut trace = Vec::new();
    while selected.len() < m_max.min(candidates.len()) {
        let mut best: Option<(usize, usize)> = None;
        for t in 0..candidates.len() {
            if selected.contains(&t) {
                continue;
            }
            selected.push(t);
            let cov = coverage(layer, &selected, pairs);
            selected.pop();
            evaluations += 1;
            let better = match best {
                None => true,
                Some((bt, bc)) => {
                    cov > bc
                        || (cov == bc && candidate_order(&candidates[t], &candidates[bt]).is_lt())
                }
            };
            if better {
                best = Some((t, cov));
            }
        }
        let Some((t, cov)) = best else { break };
        if selected.len() >= m_min && cov <= covered {
            break;
        }
        selected.push(t);
        covered = cov;
        trace.push(cov as f64 / pairs as f64);
    }
    let mut diagnostics = Vec::new();
    if covered == 0 {
        diagnostics.push("zero coverage: no term set agrees with any sampled pair".to_string());
    }
    Ok(ListwiseExplanation {
        qid: String::new(),
        method: method.to_string(),
        terms: selected
            .iter()
            .map(|&t| candidates[t].term.clone())
            .collect(),
        fidelity: BTreeMap::from([("coverage".to_string(), covered as f64 / pairs as f64)]),
        evaluations,
        diagnostics,
        trace,
    })
}

/// IntentEXS: greedy coverage of a single ranker's preference matrix.
pub fn intent_exs_explain(
    matrix: &PreferenceMatrix,
    m_min: usize,
    m_max: usize,
) -> Result<ListwiseExplanation> {
    if matrix.rankers.len() != 1 {
        return Err(Error::contract(format!(
            "IntentEXS explains with exactly one ranker, the matrix has {}",
            matrix.rankers.len()
        )));
    }
    greedy_coverage(
        &matrix.layers[0],
        &matrix.terms,
        matrix.pairs.len(),
        m_min,
        m_max,
        "intent",
    )
}

/// Multiplex: greedy coverage of the consensus of all rankers.
pub fn multiplex_explain(
    matrix: &PreferenceMatrix,
    m_min: usize,
    m_max: usize,
) -> Result<ListwiseExplanation> {
    greedy_coverage(
        &matrix.consensus_layer(),
        &matrix.terms,
        matrix.pairs.len(),
        m_min,
        m_max,
        "multiplex",
    )
}

/// Fidelity of expanded queries: RBO between the simple ranker's re-ranking
/// of the list's documents and the list itself.
pub struct FidelityOracle<'a> {
    index: &'a PositionalIndex,
    ranker: &'a dyn Ranker,
    query: &'a Query,
    target: Vec<&'a str>,
    p: f64,
    evaluations: usize,
}

impl<'a> FidelityOracle<'a> {
    pub fn new(
        index: &'a PositionalIndex,
        ranker: &'a dyn Ranker,
        query: &'a Query,
        list: &'a RankedList,
        p: f64,
    ) -> Result<Self> {
        if list.len() < 2 {
            return Err(Error::contract(
                "listwise explanation needs at least 2 ranked documents",
            ));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param(format!(
                "rbo persistence must lie in (0,1), got {p}"
            )));
        }
        Ok(FidelityOracle {
            index,
            ranker,
            query,
            target: list.docids(),
            p,
            evaluations: 0,
        })
    }

    /// Ranking induced by `query ∪ expansion` over the list's documents.
    pub fn rerank<S: AsRef<str>>(&self, expansion: &[S]) -> Result<RankedList> {
        let mut q = self.query.weighted();
        q.extend(expansion.iter().map(|t| WeightedTerm::unit(t.as_ref())));
        let ranked = rank(
            self.index,
            self.ranker,
            &self.query.qid,
            &q,
            Some(&self.target),
            self.target.len(),
        )?;
        let pool: HashSet<&str> = self.target.iter().copied().collect();
        if ranked.len() != self.target.len() || ranked.docids().iter().any(|d| !pool.contains(d)) {
            return Err(Error::contract(
                "re-ranking escaped the explained list's documents",
            ));
        }
        Ok(ranked)
    }

    /// Counts one evaluation.
    pub fn fidelity<S: AsRef<str>>(&mut self, expansion: &[S]) -> Result<f64> {
        self.evaluations += 1;
        self.score(expansion)
    }

    /// Same value as [`fidelity`](Self::fidelity) without counting.
    pub fn score<S: AsRef<str>>(&self, expansion: &[S]) -> Result<f64> {
        let ranked = self.rerank(expansion)?;
        rbo(&ranked.docids(), &self.target, self.p)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }
}

/// Candidate indices sorted by the tie rule; position in this order is a
/// candidate's "rank id".
fn rank_ids(candidates: &[CandidateTerm]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidate_order(&candidates[a], &candidates[b]));
    order
}

fn check_candidates(candidates: &[CandidateTerm]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::contract("no candidate terms"));
    }
    let mut seen = HashSet::new();
    if let Some(c) = candidates.iter().find(|c| !seen.insert(c.term.as_str())) {
        return Err(Error::contract(format!(
            "candidate `{}` listed twice",
            c.term
        )));
    }
    Ok(())
}

/// Greedy forward selection on RBO fidelity. Evaluations count fidelity
/// computations of non-empty term sets; the empty-set baseline is free.
pub fn greedy_explain(
    index: &PositionalIndex,
    simple_ranker: &dyn Ranker,
    query: &Query,
    list: &RankedList,
    candidates: &[CandidateTerm],
    m_max: usize,
    p: f64,
) -> Result<ListwiseExplanation> {
    check_candidates(candidates)?;
    let mut oracle = FidelityOracle::new(index, simple_ranker, query, list, p)?;
    let order = rank_ids(candidates);
    let mut selected: Vec<usize> = Vec::new();
    let mut current = oracle.score::<&str>(&[])?;
    let mut trace = vec![current];

    while selected.len() < m_max {
        let mut best: Option<(usize, f64)> = None;
        for &c in &order {
            if selected.contains(&c) {
                continue;
            }
            let mut set = selected.clone();
            set.push(c);
            let f = oracle.fidelity(&canonical_terms(candidates, &order, &set))?;
            // `order` already encodes the tie rule, so only strict gains replace.
            if best.is_none_or(|(_, bf)| f > bf) {
                best = Some((c, f));
            }
        }
        match best {
            Some((c, f)) if f > current => {
                selected.push(c);
                current = f;
                trace.push(f);
            }
            _ => break,
        }
    }

    Ok(ListwiseExplanation {
        qid: query.qid.clone(),
        method: "greedy".into(),
        terms: selected
            .iter()
            .map(|&c| candidates[c].term.clone())
            .collect(),
        fidelity: BTreeMap::from([(rbo_key(p), current)]),
        evaluations: oracle.evaluations(),
        diagnostics: Vec::new(),
        trace,
    })
}

/// Terms of `set` in canonical (tie-rule) order, so that a set always maps to
/// the same expanded query regardless of how it was reached.
fn canonical_terms<'c>(
    candidates: &'c [CandidateTerm],
    order: &[usize],
    set: &[usize],
) -> Vec<&'c str> {
    let mut pos: Vec<usize> = set
        .iter()
        .map(|c| order.iter().position(|o| o == c).expect("candidate index"))
        .collect();
    pos.sort_unstable();
    pos.into_iter()
        .map(|r| candidates[order[r]].term.as_str())
        .collect()
}

/// A term set (sorted rank ids) with its fidelity. The ordering makes the
/// "best" set the greatest: higher fidelity, then fewer terms, then the
/// lexicographically smaller rank-id sequence.
#[derive(Debug, Clone)]
pub struct ScoredSet {
    pub fidelity: f64,
    pub ranks: Vec<usize>,
}

impl PartialEq for ScoredSet {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScoredSet {}

impl PartialOrd for ScoredSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScoredSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.fidelity
            .total_cmp(&other.fidelity)
            .then_with(|| other.ranks.len().cmp(&self.ranks.len()))
            .then_with(|| other.ranks.cmp(&self.ranks))
    }
}

/// Best-first search over term sets of size at most `m_max`.
///
/// The frontier is a max-heap keyed by fidelity; each popped set is expanded
/// by every unused candidate, duplicates are skipped, and the search stops
/// once `eval_budget` non-empty sets have been evaluated or the frontier is
/// exhausted. Returns the best set seen, the empty set included.
#[allow(clippy::too_many_arguments)]
pub fn bfs_explain(
    index: &PositionalIndex,
    simple_ranker: &dyn Ranker,
    query: &Query,
    list: &RankedList,
    candidates: &[CandidateTerm],
    m_max: usize,
    p: f64,
    eval_budget: usize,
) -> Result<ListwiseExplanation> {
    check_candidates(candidates)?;
    if eval_budget == 0 {
        return Err(Error::param("eval_budget must be >= 1"));
    }
    let mut oracle = FidelityOracle::new(index, simple_ranker, query, list, p)?;
    let order = rank_ids(candidates);
    let terms_of = |ranks: &[usize]| -> Vec<&str> {
        ranks
            .iter()
            .map(|&r| candidates[order[r]].term.as_str())
            .collect()
    };

    let root = ScoredSet {
        fidelity: oracle.score::<&str>(&[])?,
        ranks: Vec::new(),
    };
    let mut best = root.clone();
    let mut frontier = BinaryHeap::from([root]);
    let mut visited: HashSet<Vec<usize>> = HashSet::from([Vec::new()]);

    'search: while let Some(node) = frontier.pop() {
        if node.ranks.len() >= m_max {
            continue;
        }
        for r in 0..candidates.len() {
            if node.ranks.binary_search(&r).is_ok() {
                continue;
            }
            let mut ranks = node.ranks.clone();
            let at = ranks.binary_search(&r).unwrap_err();
            ranks.insert(at, r);
            if !visited.insert(ranks.clone()) {
                continue;
            }
            if oracle.evaluations() >= eval_budget {
                break 'search;
            }
            let child = ScoredSet {
                fidelity: oracle.fidelity(&terms_of(&ranks))?,
                ranks,
            };
            if child > best {
                best = child.clone();
            }
            frontier.push(child);
        }
    }

    Ok(ListwiseExplanation {
        qid: query.qid.clone(),
        method: "bfs".into(),
        terms: terms_of(&best.ranks)
            .into_iter()
            .map(str::to_string)
            .collect(),
        fidelity: BTreeMap::from([(rbo_key(p), best.fidelity)]),
        evaluations: oracle.evaluations(),
        diagnostics: Vec::new(),
        trace: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListwiseMethod {
    Multiplex,
    Intent,
    Greedy,
    Bfs,
}

impl ListwiseMethod {
    pub const NAMES: [&'static str; 4] = ["multiplex", "intent", "greedy", "bfs"];
}

impl fmt::Display for ListwiseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Self::NAMES[*self as usize])
    }
}

impl FromStr for ListwiseMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multiplex" => Ok(Self::Multiplex),
            "intent" | "intentexs" | "intent_exs" => Ok(Self::Intent),
            "greedy" => Ok(Self::Greedy),
            "bfs" => Ok(Self::Bfs),
            _ => Err(Error::unknown_name("listwise method", s, &Self::NAMES)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ListwiseParams {
    pub top_k: usize,
    pub n_candidates: usize,
    pub n_pairs: usize,
    pub pair_strategy: PairStrategy,
    pub m_min: usize,
    pub m_max: usize,
    /// RBO persistence.
    pub p: f64,
    pub eval_budget: usize,
    /// Rankers whose consensus Multiplex covers.
    pub simple_rankers: Vec<SimpleRankerKind>,
    /// Ranker used by IntentEXS, Greedy and BFS, and for reporting fidelity.
    pub simple_ranker: SimpleRankerKind,
    pub ranker_params: RankerParams,
    pub seed: u64,
}

impl Default for ListwiseParams {
    fn default() -> Self {
        ListwiseParams {
            top_k: 10,
            n_candidates: 100,
            n_pairs: 50,
            pair_strategy: PairStrategy::Uniform,
            m_min: 3,
            m_max: 10,
            p: 0.9,
            eval_budget: 1000,
            simple_rankers: SimpleRankerKind::ALL.to_vec(),
            simple_ranker: SimpleRankerKind::Bm25,
            ranker_params: RankerParams::default(),
            seed: 0,
        }
    }
}

/// Full pipeline for one query: candidates from the list, then the chosen
/// explainer. Every result carries RBO fidelity under `simple_ranker`.
pub fn explain_query(
    method: ListwiseMethod,
    index: &PositionalIndex,
    query: &Query,
    list: &RankedList,
    params: &ListwiseParams,
) -> Result<ListwiseExplanation> {
    if list.len() < 2 {
        return Err(Error::contract(format!(
            "qid {}: list has fewer than 2 documents",
            query.qid
        )));
    }
    let top_k = params.top_k.min(list.len());
    let candidates = generate_candidates(index, list, top_k, params.n_candidates)?;
    let simple: Arc<dyn Ranker> = params.simple_ranker.build(&params.ranker_params)?;

    let mut expl = match method {
        ListwiseMethod::Greedy => greedy_explain(
            index,
            &simple,
            query,
            list,
            &candidates,
            params.m_max,
            params.p,
        )?,
        ListwiseMethod::Bfs => bfs_explain(
            index,
            &simple,
            query,
            list,
            &candidates,
            params.m_max,
            params.p,
            params.eval_budget,
        )?,
        ListwiseMethod::Multiplex | ListwiseMethod::Intent => {
            let mut rng = XorShift64Star::new(params.seed);
            let pairs = sample_pairs(list, params.pair_strategy, params.n_pairs, &mut rng)?;
            let rankers = if method == ListwiseMethod::Intent {
                vec![params.simple_ranker]
            } else {
                params.simple_rankers.clone()
            };
            let matrix = build_preference_matrix(
                index,
                &rankers,
                &params.ranker_params,
                &candidates,
                &pairs,
            )?;
            let mut e = if method == ListwiseMethod::Intent {
                intent_exs_explain(&matrix, params.m_min, params.m_max)?
            } else {
                multiplex_explain(&matrix, params.m_min, params.m_max)?
            };
            let oracle = FidelityOracle::new(index, &simple, query, list, params.p)?;
            e.fidelity
                .insert(rbo_key(params.p), oracle.score(&e.terms)?);
            e
        }
    };
    expl.qid = query.qid.clone();
    Ok(expl)
}

/// Runs `explain_query` for every query, concurrently. A failure is recorded
/// against its qid and does not stop the batch.
pub fn explain_all(
    method: ListwiseMethod,
    index: &PositionalIndex,
    queries: &[Query],
    runs: &BTreeMap<String, RankedList>,
    params: &ListwiseParams,
) -> BTreeMap<String, Result<ListwiseExplanation, String>> {
    queries
        .par_iter()
        .map(|q| {
            let result = runs
                .get(&q.qid)
                .ok_or_else(|| Error::UnknownQid(q.qid.clone()))
                .and_then(|list| explain_query(method, index, q, list, params))
                .map_err(|e| e.to_string());
            (q.qid.clone(), result)
        })
        .collect()
}
