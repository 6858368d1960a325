//! Retrieval axioms as pairwise explanations.
//!
//! Each axiom states which of two documents should rank higher for a query,
//! returning +1 (prefer the first), -1 (prefer the second) or 0. Strict
//! axiom preconditions rarely hold on real documents, so length and tf
//! comparisons use a relative slack of 10%.
//!
//! Proximity distances are measured in analyzed-token positions, i.e. after
//! stopword removal. PROX2 to PROX5 follow the definitions documented on
//! [`Axiom`]; they are this crate's formalization of the named axioms.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::index::PositionalIndex;
use crate::rankers::Query;
use crate::{Error, Result};

/// Relative slack for "comparable" lengths and term frequencies.
pub const SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preference {
    First,
    Neither,
    Second,
}

impl Preference {
    pub fn value(self) -> i8 {
        match self {
            Preference::First => 1,
            Preference::Neither => 0,
            Preference::Second => -1,
        }
    }

    pub fn from_sign(x: f64) -> Self {
        if x > 0.0 {
            Preference::First
        } else if x < 0.0 {
            Preference::Second
        } else {
            Preference::Neither
        }
    }

    fn from_ordering(o: Ordering) -> Self {
        match o {
            Ordering::Greater => Preference::First,
            Ordering::Equal => Preference::Neither,
            Ordering::Less => Preference::Second,
        }
    }

    /// Prefers the document with the larger value.
    fn larger<T: PartialOrd>(a: T, b: T) -> Self {
        Self::from_ordering(a.partial_cmp(&b).unwrap_or(Ordering::Equal))
    }

    /// Prefers the document with the smaller value; equal infinities tie.
    fn smaller<T: PartialOrd>(a: T, b: T) -> Self {
        Self::larger(b, a)
    }

    pub fn reversed(self) -> Self {
        match self {
            Preference::First => Preference::Second,
            Preference::Neither => Preference::Neither,
            Preference::Second => Preference::First,
        }
    }
}

impl Serialize for Preference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Preference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Preference::First),
            0 => Ok(Preference::Neither),
            -1 => Ok(Preference::Second),
            v => Err(serde::de::Error::custom(format!(
                "preference must be -1, 0 or 1, got {v}"
            ))),
        }
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preference::First => f.write_str("+1"),
            Preference::Neither => f.write_str("0"),
            Preference::Second => f.write_str("-1"),
        }
    }
}

/// Anything that states a preference over a document pair.
pub trait PairwiseAxiom: Send + Sync {
    fn name(&self) -> String;

    fn preference(
        &self,
        index: &PositionalIndex,
        query: &Query,
        di: &str,
        dj: &str,
    ) -> Result<Preference>;
}

/// The implemented axioms.
///
/// * `TFC1`: comparable lengths; more query-term occurrences wins.
/// * `TFC3`: comparable lengths and equal total query tf; more distinct
///   query terms wins.
/// * `TDC`: comparable lengths; larger `Σ tf·idf` over query terms wins.
/// * `LNC1`: identical tf for every query term; the shorter document wins.
/// * `TF_LNC`: `Di` has at least `Dj`'s tf for every query term (one strictly
///   more) and `dl_i ≤ dl_j + Σ(tf_i − tf_j)`.
/// * `LB1`: `Di` matches a strict superset of `Dj`'s query terms with
///   comparable tf on the shared ones.
/// * `PROX1`: smaller mean over matched query-term pairs of the average
///   occurrence distance.
/// * `PROX2`: more matched query terms, then the smaller window covering
///   one occurrence of each.
/// * `PROX3`: the full query as a contiguous phrase, earliest start wins.
/// * `PROX4`: smaller minimum distance between occurrences of two different
///   query terms.
/// * `PROX5`: smaller mean distance from each query-term occurrence to the
///   nearest occurrence of a different query term.
/// * `AND`: containing every query term beats missing some.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    Tfc1,
    Tfc3,
    Tdc,
    Lnc1,
    TfLnc,
    Lb1,
    Prox1,
    Prox2,
    Prox3,
    Prox4,
    Prox5,
    And,
}

impl Axiom {
    pub const ALL: [Axiom; 12] = [
        Axiom::Tfc1,
        Axiom::Tfc3,
        Axiom::Tdc,
        Axiom::Lnc1,
        Axiom::TfLnc,
        Axiom::Lb1,
        Axiom::Prox1,
        Axiom::Prox2,
        Axiom::Prox3,
        Axiom::Prox4,
        Axiom::Prox5,
        Axiom::And,
    ];

    const NAMES: [&'static str; 12] = [
        "TFC1", "TFC3", "TDC", "LNC1", "TF_LNC", "LB1", "PROX1", "PROX2", "PROX3", "PROX4",
        "PROX5", "AND",
    ];

    pub fn as_str(self) -> &'static str {
        Self::NAMES[self as usize]
    }

    pub fn has_details(self) -> bool {
        matches!(
            self,
            Axiom::Tfc1
                | Axiom::Tdc
                | Axiom::Prox1
                | Axiom::Prox2
                | Axiom::Prox3
                | Axiom::Prox4
                | Axiom::Prox5
        )
    }

    fn decide(self, index: &PositionalIndex, ctx: &PairContext) -> Preference {
        let (a, b) = (&ctx.docs[0], &ctx.docs[1]);
        let comparable = comparable(a.dl as f64, b.dl as f64);
        match self {
            Axiom::Tfc1 if comparable => Preference::larger(a.total_tf(), b.total_tf()),
            Axiom::Tfc3 if comparable && a.total_tf() == b.total_tf() => {
                Preference::larger(a.matched(), b.matched())
            }
            Axiom::Tdc if comparable => {
                let idf: Vec<f64> = ctx.terms.iter().map(|t| index.idf(t)).collect();
                Preference::larger(a.weighted_tf(&idf), b.weighted_tf(&idf))
            }
            Axiom::Tfc1 | Axiom::Tfc3 | Axiom::Tdc => Preference::Neither,
            Axiom::Lnc1 if a.tf == b.tf => Preference::smaller(a.dl, b.dl),
            Axiom::Lnc1 => Preference::Neither,
            Axiom::TfLnc => {
                if tf_lnc_holds(a, b) {
                    Preference::First
                } else if tf_lnc_holds(b, a) {
                    Preference::Second
                } else {
                    Preference::Neither
                }
            }
            Axiom::Lb1 => {
                if lb1_holds(a, b) {
                    Preference::First
                } else if lb1_holds(b, a) {
                    Preference::Second
                } else {
                    Preference::Neither
                }
            }
            Axiom::Prox1 => prox1_preference(
                a.profile(&ctx.pairs).total_avg_dist(),
                b.profile(&ctx.pairs).total_avg_dist(),
            ),
            Axiom::Prox2 => match a.matched().cmp(&b.matched()) {
                Ordering::Equal if a.matched() >= 2 => {
                    Preference::smaller(a.min_window(), b.min_window())
                }
                Ordering::Equal => Preference::Neither,
                o => Preference::from_ordering(o),
            },
            Axiom::Prox3 => Preference::smaller(
                a.phrase_start(&ctx.query_terms),
                b.phrase_start(&ctx.query_terms),
            ),
            Axiom::Prox4 => Preference::smaller(a.min_pair_distance(), b.min_pair_distance()),
            Axiom::Prox5 => {
                Preference::smaller(a.mean_nearest_distance(), b.mean_nearest_distance())
            }
            Axiom::And => Preference::larger(a.matched() == a.tf.len(), b.matched() == b.tf.len()),
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        Self::NAMES
            .iter()
            .position(|n| *n == upper)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| Error::unknown_name("axiom", s, &Self::NAMES))
    }
}

impl PairwiseAxiom for Axiom {
    fn name(&self) -> String {
        self.as_str().to_string()
    }

    fn preference(
        &self,
        index: &PositionalIndex,
        query: &Query,
        di: &str,
        dj: &str,
    ) -> Result<Preference> {
        let ctx = PairContext::new(index, query, di, dj)?;
        Ok(self.decide(index, &ctx))
    }
}

/// Convenience entry point taking the axiom by name.
pub fn axiom_preference(
    name: &str,
    index: &PositionalIndex,
    query: &Query,
    di: &str,
    dj: &str,
) -> Result<Preference> {
    name.parse::<Axiom>()?.preference(index, query, di, dj)
}

fn comparable(x: f64, y: f64) -> bool {
    (x - y).abs() <= SLACK * x.max(y)
}

fn tf_lnc_holds(a: &DocView, b: &DocView) -> bool {
    let dominates = a.tf.iter().zip(&b.tf).all(|(x, y)| x >= y);
    let strict = a.tf.iter().zip(&b.tf).any(|(x, y)| x > y);
    let extra: i64 =
        a.tf.iter()
            .zip(&b.tf)
            .map(|(&x, &y)| x as i64 - y as i64)
            .sum();
    dominates && strict && (a.dl as i64) <= b.dl as i64 + extra
}

fn lb1_holds(a: &DocView, b: &DocView) -> bool {
    let superset = a.tf.iter().zip(&b.tf).all(|(&x, &y)| y == 0 || x > 0);
    let strict = a.tf.iter().zip(&b.tf).any(|(&x, &y)| x > 0 && y == 0);
    let shared_comparable =
        a.tf.iter()
            .zip(&b.tf)
            .filter(|(&x, &y)| x > 0 && y > 0)
            .all(|(&x, &y)| comparable(x as f64, y as f64));
    superset && strict && shared_comparable
}

/// PROX1 decision from the two totals; documents without a matched pair
/// give no preference.
pub fn prox1_preference(total_i: Option<f64>, total_j: Option<f64>) -> Preference {
    match (total_i, total_j) {
        (Some(a), Some(b)) => Preference::smaller(a, b),
        _ => Preference::Neither,
    }
}

/// Unordered query-term index pairs, adjacent terms first:
/// `(0,1), (1,2), …, (0,2), …`.
fn term_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..n)
        .flat_map(|gap| (0..n - gap).map(move |i| (i, i + gap)))
        .collect()
}

/// Mean absolute position difference over all occurrence pairs.
pub fn average_distance(xs: &[u32], ys: &[u32]) -> Option<f64> {
    if xs.is_empty() || ys.is_empty() {
        return None;
    }
    let total: u64 = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| x.abs_diff(y) as u64))
        .sum();
    Some(total as f64 / (xs.len() * ys.len()) as f64)
}

/// Per-document statistics restricted to the distinct query terms.
struct DocView {
    docid: String,
    dl: u32,
    tf: Vec<u32>,
    positions: Vec<Vec<u32>>,
    tokens: Vec<String>,
}

impl DocView {
    fn new(index: &PositionalIndex, terms: &[String], docid: &str) -> Result<Self> {
        let doc = index.document(docid)?;
        let positions: Vec<Vec<u32>> = terms
            .iter()
            .map(|t| index.positions(t, docid))
            .collect::<Result<_>>()?;
        Ok(DocView {
            docid: docid.to_string(),
            dl: doc.tokens.len() as u32,
            tf: positions.iter().map(|p| p.len() as u32).collect(),
            positions,
            tokens: doc.tokens.clone(),
        })
    }

    fn total_tf(&self) -> u32 {
        self.tf.iter().sum()
    }

    fn matched(&self) -> usize {
        self.tf.iter().filter(|&&t| t > 0).count()
    }

    fn weighted_tf(&self, idf: &[f64]) -> f64 {
        self.tf.iter().zip(idf).map(|(&t, w)| t as f64 * w).sum()
    }

    fn profile(&self, pairs: &[(usize, usize)]) -> ProximityProfile {
        ProximityProfile {
            tf: self.tf.clone(),
            pair_avg: pairs
                .iter()
                .map(|&(i, j)| average_distance(&self.positions[i], &self.positions[j]))
                .collect(),
        }
    }

    /// Occurrences of matched query terms as (position, term index), sorted.
    fn occurrences(&self) -> Vec<(u32, usize)> {
        let mut occ: Vec<(u32, usize)> = self
            .positions
            .iter()
            .enumerate()
            .flat_map(|(t, ps)| ps.iter().map(move |&p| (p, t)))
            .collect();
        occ.sort_unstable();
        occ
    }

    /// Shortest span (in positions, inclusive) holding every matched term.
    fn min_window(&self) -> f64 {
        let needed = self.matched();
        if needed == 0 {
            return f64::INFINITY;
        }
        let occ = self.occurrences();
        let mut counts = vec![0usize; self.tf.len()];
        let mut have = 0;
        let mut best = u32::MAX;
        let mut left = 0;
        for right in 0..occ.len() {
            let t = occ[right].1;
            counts[t] += 1;
            if counts[t] == 1 {
                have += 1;
            }
            while have == needed {
                best = best.min(occ[right].0 - occ[left].0 + 1);
                let lt = occ[left].1;
                counts[lt] -= 1;
                if counts[lt] == 0 {
                    have -= 1;
                }
                left += 1;
            }
        }
        best as f64
    }

    fn phrase_start(&self, phrase: &[String]) -> f64 {
        if phrase.is_empty() || phrase.len() > self.tokens.len() {
            return f64::INFINITY;
        }
        self.tokens
            .windows(phrase.len())
            .position(|w| w == phrase)
            .map_or(f64::INFINITY, |p| p as f64)
    }

    fn min_pair_distance(&self) -> f64 {
        let occ = self.occurrences();
        occ.windows(2)
            .filter(|w| w[0].1 != w[1].1)
            .map(|w| (w[1].0 - w[0].0) as f64)
            .fold(f64::INFINITY, f64::min)
    }

    fn mean_nearest_distance(&self) -> f64 {
        if self.matched() < 2 {
            return f64::INFINITY;
        }
        let occ = self.occurrences();
        let total: f64 = occ
            .iter()
            .map(|&(p, t)| {
                occ.iter()
                    .filter(|o| o.1 != t)
                    .map(|o| o.0.abs_diff(p))
                    .min()
                    .expect("at least two matched terms") as f64
            })
            .sum();
        total / occ.len() as f64
    }
}

struct PairContext {
    terms: Vec<String>,
    query_terms: Vec<String>,
    pairs: Vec<(usize, usize)>,
    docs: [DocView; 2],
}

impl PairContext {
    fn new(index: &PositionalIndex, query: &Query, di: &str, dj: &str) -> Result<Self> {
        let terms = query.distinct_terms();
        let pairs = term_pairs(terms.len());
        Ok(PairContext {
            docs: [
                DocView::new(index, &terms, di)?,
                DocView::new(index, &terms, dj)?,
            ],
            query_terms: query.terms.clone(),
            pairs,
            terms,
        })
    }
}

/// Term frequencies and pairwise average distances of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityProfile {
    /// One entry per distinct query term.
    pub tf: Vec<u32>,
    /// One entry per query-term pair (adjacent pairs first); `None` when a
    /// term of the pair is missing from the document.
    pub pair_avg: Vec<Option<f64>>,
}

impl ProximityProfile {
    pub fn num_pairs(&self) -> usize {
        self.pair_avg.iter().flatten().count()
    }

    /// Arithmetic mean of the defined pair averages.
    pub fn total_avg_dist(&self) -> Option<f64> {
        let n = self.num_pairs();
        (n > 0).then(|| self.pair_avg.iter().flatten().sum::<f64>() / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Count(u64),
    Value(f64),
    /// Undefined or infinite.
    Missing,
}

impl Cell {
    fn real(x: Option<f64>) -> Self {
        match x {
            Some(v) if v.is_finite() => Cell::Value(v),
            _ => Cell::Missing,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Count(n) => n.to_string(),
            Cell::Value(v) => format!("{v:.2}"),
            Cell::Missing => "-".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailsRow {
    pub label: String,
    pub d1: Cell,
    pub d2: Cell,
}

impl DetailsRow {
    fn new(label: impl Into<String>, d1: Cell, d2: Cell) -> Self {
        DetailsRow {
            label: label.into(),
            d1,
            d2,
        }
    }
}

/// The diagnostic breakdown behind an axiom's decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailsTable {
    pub axiom: String,
    pub docids: [String; 2],
    pub rows: Vec<DetailsRow>,
    pub preference: Preference,
}

fn tf_rows(terms: &[String], tf1: &[u32], tf2: &[u32]) -> Vec<DetailsRow> {
    terms
        .iter()
        .zip(tf1.iter().zip(tf2))
        .map(|(t, (&a, &b))| {
            DetailsRow::new(
                format!("tf({t})"),
                Cell::Count(a as u64),
                Cell::Count(b as u64),
            )
        })
        .collect()
}

impl DetailsTable {
    /// Builds the PROX1 table from two profiles: tf rows, one `avg_dist` row
    /// per term pair, `num pairs`, and `Total_avg_dist`, the arithmetic mean
    /// of the pair averages, which also decides the preference.
    pub fn prox1(docids: [&str; 2], terms: &[String], profiles: [&ProximityProfile; 2]) -> Self {
        let [p1, p2] = profiles;
        let mut rows = tf_rows(terms, &p1.tf, &p2.tf);
        for (k, (i, j)) in term_pairs(terms.len()).into_iter().enumerate() {
            rows.push(DetailsRow::new(
                format!("avg_dist({}, {})", terms[i], terms[j]),
                Cell::real(p1.pair_avg[k]),
                Cell::real(p2.pair_avg[k]),
            ));
        }
        rows.push(DetailsRow::new(
            "num pairs",
            Cell::Count(p1.num_pairs() as u64),
            Cell::Count(p2.num_pairs() as u64),
        ));
        let (t1, t2) = (p1.total_avg_dist(), p2.total_avg_dist());
        rows.push(DetailsRow::new(
            "Total_avg_dist",
            Cell::real(t1),
            Cell::real(t2),
        ));
        DetailsTable {
            axiom: Axiom::Prox1.to_string(),
            docids: [docids[0].to_string(), docids[1].to_string()],
            rows,
            preference: prox1_preference(t1, t2),
        }
    }

    pub fn row(&self, label: &str) -> Option<&DetailsRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Aligned plain-text table: a docid header, one line per row, and the
    /// preference.
    pub fn render_text(&self) -> String {
        let mut lines: Vec<[String; 3]> = vec![[
            "docid".into(),
            self.docids[0].clone(),
            self.docids[1].clone(),
        ]];
        lines.extend(
            self.rows
                .iter()
                .map(|r| [r.label.clone(), r.d1.render(), r.d2.render()]),
        );
        let w0 = lines
            .iter()
            .map(|l| l[0].chars().count())
            .max()
            .unwrap_or(0)
            .max("preference".len());
        let w1 = lines
            .iter()
            .map(|l| l[1].chars().count())
            .max()
            .unwrap_or(0);
        let w2 = lines
            .iter()
            .map(|l| l[2].chars().count())
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        writeln!(out, "axiom: {}", self.axiom).unwrap();
        for l in &lines {
            writeln!(out, "{:<w0$}  {:>w1$}  {:>w2$}", l[0], l[1], l[2]).unwrap();
        }
        writeln!(
            out,
            "{:<w0$}  {:>w1$}",
            "preference",
            self.preference.to_string()
        )
        .unwrap();
        out
    }
}

/// Detailed view of one axiom's decision; available for TFC1, TDC and the
/// proximity axioms.
pub fn explain_details(
    axiom: Axiom,
    index: &PositionalIndex,
    query: &Query,
    di: &str,
    dj: &str,
) -> Result<DetailsTable> {
    if !axiom.has_details() {
        return Err(Error::contract(format!("no detailed view for {axiom}")));
    }
    let ctx = PairContext::new(index, query, di, dj)?;
    let [a, b] = &ctx.docs;
    let preference = axiom.decide(index, &ctx);
    let docids = [a.docid.clone(), b.docid.clone()];
    let mut rows = Vec::new();
    match axiom {
        Axiom::Prox1 => {
            let (pa, pb) = (a.profile(&ctx.pairs), b.profile(&ctx.pairs));
            let table = DetailsTable::prox1([di, dj], &ctx.terms, [&pa, &pb]);
            debug_assert_eq!(table.preference, preference);
            return Ok(table);
        }
        Axiom::Tfc1 | Axiom::Tdc => {
            rows.extend(tf_rows(&ctx.terms, &a.tf, &b.tf));
            rows.push(DetailsRow::new(
                "doc_length",
                Cell::Count(a.dl as u64),
                Cell::Count(b.dl as u64),
            ));
            if axiom == Axiom::Tfc1 {
                rows.push(DetailsRow::new(
                    "sum_tf",
                    Cell::Count(a.total_tf() as u64),
                    Cell::Count(b.total_tf() as u64),
                ));
            } else {
                let idf: Vec<f64> = ctx.terms.iter().map(|t| index.idf(t)).collect();
                for (t, w) in ctx.terms.iter().zip(&idf) {
                    rows.push(DetailsRow::new(
                        format!("idf({t})"),
                        Cell::Value(*w),
                        Cell::Value(*w),
                    ));
                }
                rows.push(DetailsRow::new(
                    "sum_tf_idf",
                    Cell::Value(a.weighted_tf(&idf)),
                    Cell::Value(b.weighted_tf(&idf)),
                ));
            }
        }
        _ => {
            rows.extend(tf_rows(&ctx.terms, &a.tf, &b.tf));
            let (label, va, vb) = match axiom {
                Axiom::Prox2 => ("min_window", a.min_window(), b.min_window()),
                Axiom::Prox3 => (
                    "phrase_start",
                    a.phrase_start(&ctx.query_terms),
                    b.phrase_start(&ctx.query_terms),
                ),
                Axiom::Prox4 => (
                    "min_pair_dist",
                    a.min_pair_distance(),
                    b.min_pair_distance(),
                ),
                _ => (
                    "mean_nearest_dist",
                    a.mean_nearest_distance(),
                    b.mean_nearest_distance(),
                ),
            };
            rows.push(DetailsRow::new(
                "matched_terms",
                Cell::Count(a.matched() as u64),
                Cell::Count(b.matched() as u64),
            ));
            rows.push(DetailsRow::new(
                label,
                Cell::real(Some(va)),
                Cell::real(Some(vb)),
            ));
        }
    }
    Ok(DetailsTable {
        axiom: axiom.to_string(),
        docids,
        rows,
        preference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// `sign(Σ w_c · pref_c)`.
    WeightedSumSign,
    /// `sign(#(+1) − #(−1))`, weights ignored.
    Majority,
}

impl FromStr for AggregationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted_sum_sign" => Ok(Self::WeightedSumSign),
            "majority" => Ok(Self::Majority),
            _ => Err(Error::unknown_name(
                "aggregation mode",
                s,
                &["weighted_sum_sign", "majority"],
            )),
        }
    }
}

/// A combination of axioms; itself an axiom, so aggregates nest.
#[derive(Clone)]
pub struct AggregatedAxiom {
    children: Vec<(Arc<dyn PairwiseAxiom>, f64)>,
    mode: AggregationMode,
}

impl AggregatedAxiom {
    pub fn new(
        children: Vec<(Arc<dyn PairwiseAxiom>, f64)>,
        mode: AggregationMode,
    ) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::contract("aggregate needs at least one axiom"));
        }
        if children.iter().any(|(_, w)| !w.is_finite()) {
            return Err(Error::param("aggregate weights must be finite"));
        }
        Ok(AggregatedAxiom { children, mode })
    }

    /// Equal-weight aggregate over plain axioms.
    pub fn of(axioms: &[Axiom], mode: AggregationMode) -> Result<Self> {
        Self::new(
            axioms
                .iter()
                .map(|&a| (Arc::new(a) as Arc<dyn PairwiseAxiom>, 1.0))
                .collect(),
            mode,
        )
    }
}

impl PairwiseAxiom for AggregatedAxiom {
    fn name(&self) -> String {
        let op = match self.mode {
            AggregationMode::WeightedSumSign => "+",
            AggregationMode::Majority => "|",
        };
        let parts: Vec<String> = self
            .children
            .iter()
            .map(|(a, w)| {
                if *w == 1.0 {
                    a.name()
                } else {
                    format!("{w}*{}", a.name())
                }
            })
            .collect();
        format!("({})", parts.join(op))
    }

    fn preference(
        &self,
        index: &PositionalIndex,
        query: &Query,
        di: &str,
        dj: &str,
    ) -> Result<Preference> {
        let prefs = self
            .children
            .iter()
            .map(|(a, w)| Ok((a.preference(index, query, di, dj)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(match self.mode {
            AggregationMode::WeightedSumSign => {
                Preference::from_sign(prefs.iter().map(|(p, w)| p.value() as f64 * w).sum())
            }
            AggregationMode::Majority => {
                Preference::from_sign(prefs.iter().map(|(p, _)| p.value() as f64).sum())
            }
        })
    }
}
