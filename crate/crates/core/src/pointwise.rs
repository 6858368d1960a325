//! Pointwise explanations: why does this document get this score?
//!
//! Both explainers perturb the document, re-score every variant with the
//! black-box ranker, and fit a kernel-weighted ridge regression from term
//! presence bits to a target. LIRME regresses the raw score; EXS first maps
//! the score onto a relevance-style target relative to the query's ranking.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::index::{PositionalIndex, TermBag};
use crate::perturbation::{perturb, PerturbedSample, SamplerConfig};
use crate::rankers::{Query, RankedList, Ranker};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

impl TermWeight {
    pub fn new(term: impl Into<String>, weight: f64) -> Self {
        TermWeight {
            term: term.into(),
            weight,
        }
    }
}

fn by_magnitude(a: &TermWeight, b: &TermWeight) -> Ordering {
    b.weight
        .abs()
        .total_cmp(&a.weight.abs())
        .then_with(|| a.term.cmp(&b.term))
}

/// Signed term weights ordered by decreasing magnitude, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct ExplanationVector {
    entries: Vec<TermWeight>,
}

impl ExplanationVector {
    pub fn new(mut entries: Vec<TermWeight>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        if let Some(dup) = entries.iter().find(|e| !seen.insert(e.term.as_str())) {
            return Err(Error::contract(format!(
                "term `{}` appears twice",
                dup.term
            )));
        }
        if entries.iter().any(|e| !e.weight.is_finite()) {
            return Err(Error::contract("explanation weights must be finite"));
        }
        entries.sort_by(by_magnitude);
        Ok(ExplanationVector { entries })
    }

    pub fn entries(&self) -> &[TermWeight] {
        &self.entries
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.term.as_str())
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.term == term)
            .map(|e| e.weight)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncated(&self, m: usize) -> Self {
        ExplanationVector {
            entries: self.entries.iter().take(m).cloned().collect(),
        }
    }
}

impl<'de> Deserialize<'de> for ExplanationVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<TermWeight>::deserialize(d)?;
        ExplanationVector::new(entries).map_err(serde::de::Error::custom)
    }
}

/// How EXS turns a perturbed document's score into a regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExsVariant {
    /// 1 if the score beats the score at rank `exs_k`, else 0.
    TopkBinary,
    /// Score relative to the top score, clamped to [0, 1].
    ScoreRatio,
    /// `1 - (rank the score would take in the base list) / exs_k`, clamped.
    RankBased,
}

impl ExsVariant {
    pub const ALL: [ExsVariant; 3] = [
        ExsVariant::TopkBinary,
        ExsVariant::ScoreRatio,
        ExsVariant::RankBased,
    ];
    const NAMES: [&'static str; 3] = ["topk_binary", "score_ratio", "rank_based"];
}

impl FromStr for ExsVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topk_binary" => Ok(Self::TopkBinary),
            "score_ratio" => Ok(Self::ScoreRatio),
            "rank_based" => Ok(Self::RankBased),
            _ => Err(Error::unknown_name("exs variant", s, &Self::NAMES)),
        }
    }
}

impl fmt::Display for ExsVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Self::NAMES[*self as usize])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointwiseParams {
    pub sampler: SamplerConfig,
    /// Width σ of the exponential kernel over removal distance.
    pub kernel_width: f64,
    /// Ridge penalty λ on the term coefficients.
    pub ridge: f64,
    pub n_terms: usize,
    pub exs_variant: ExsVariant,
    pub exs_k: usize,
}

impl Default for PointwiseParams {
    fn default() -> Self {
        PointwiseParams {
            sampler: SamplerConfig::default(),
            kernel_width: 0.25,
            ridge: 1.0,
            n_terms: 10,
            exs_variant: ExsVariant::TopkBinary,
            exs_k: 10,
        }
    }
}

impl PointwiseParams {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(self.kernel_width > 0.0) {
            return Err(Error::param("kernel_width must be > 0"));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::param("ridge must be >= 0"));
        }
        if self.n_terms == 0 || self.exs_k == 0 {
            return Err(Error::param("n_terms and exs_k must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub sample_count: usize,
    /// `sqrt(Σ w_i r_i²)`.
    pub residual_norm: f64,
    /// Set when λ = 0 and the weighted design was rank deficient; the
    /// coefficients are then the minimum-norm least-squares solution.
    pub min_norm: bool,
}

/// Weighted ridge regression with an unpenalized intercept.
///
/// Minimizes `Σ w_i (y_i - β·x_i - β₀)² + λ‖β‖²` through the normal equations
/// of the weight-centered problem.
pub fn fit_weighted_ridge(
    x: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    lambda: f64,
) -> Result<SurrogateFit> {
    let n = x.len();
    if n == 0 || y.len() != n || w.len() != n {
        return Err(Error::contract(format!(
            "ridge: need matching non-empty inputs, got {} rows, {} targets, {} weights",
            n,
            y.len(),
            w.len()
        )));
    }
    let p = x[0].len();
    if x.iter().any(|row| row.len() != p) {
        return Err(Error::contract("ridge: ragged design matrix"));
    }
    if w.iter().any(|&wi| !(wi >= 0.0 && wi.is_finite())) || !(lambda >= 0.0) {
        return Err(Error::param("ridge: weights and λ must be finite and >= 0"));
    }
    let wsum: f64 = w.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::contract("ridge: all sample weights are zero"));
    }

    let x_mean: Vec<f64> = (0..p)
        .map(|j| x.iter().zip(w).map(|(row, wi)| wi * row[j]).sum::<f64>() / wsum)
        .collect();
    let y_mean = y.iter().zip(w).map(|(yi, wi)| wi * yi).sum::<f64>() / wsum;

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut centered = vec![0.0; p];
    for ((row, &yi), &wi) in x.iter().zip(y).zip(w) {
        if wi == 0.0 {
            continue;
        }
        for j in 0..p {
            centered[j] = row[j] - x_mean[j];
        }
        let yc = yi - y_mean;
        for j in 0..p {
            let wj = wi * centered[j];
            rhs[j] += wj * yc;
            for k in j..p {
                gram[(j, k)] += wj * centered[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            gram[(j, k)] = gram[(k, j)];
        }
        gram[(j, j)] += lambda;
    }

    let (beta, min_norm) = solve_normal_equations(gram, rhs)?;

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    let residual_norm = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((row, yi), wi)| {
            let pred = intercept
                + row
                    .iter()
                    .zip(&coefficients)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            wi * (yi - pred).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    Ok(SurrogateFit {
        coefficients,
        intercept,
        sample_count: n,
        residual_norm,
        min_norm,
    })
}

/// Solves the symmetric positive semi-definite system `gram · β = rhs`:
/// Cholesky when the matrix is positive definite, otherwise the SVD
/// pseudo-inverse (minimum-norm solution), reported through the flag.
fn solve_normal_equations(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let p = rhs.len();
    if p == 0 {
        return Ok((rhs, false));
    }
    let svd = gram.clone().svd(true, true);
    let tol = svd.singular_values.max() * p as f64 * f64::EPSILON * 16.0;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank == p {
        if let Some(chol) = gram.cholesky() {
            return Ok((chol.solve(&rhs), false));
        }
    }
    let beta = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::contract(e.to_string()))?;
    Ok((beta, rank < p))
}

/// Everything a local surrogate is fitted on, before targets are chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDesign {
    /// Distinct terms of the explained document; the design's columns.
    pub features: Vec<String>,
    /// Presence bits, one row per sample; row 0 is the unperturbed document.
    pub rows: Vec<Vec<f64>>,
    /// Black-box score of each sample.
    pub scores: Vec<f64>,
    /// Kernel weight `exp(-distance²/σ²)` of each sample.
    pub kernel_weights: Vec<f64>,
    pub uniform_fallback: bool,
}

/// Perturbs `docid`, scores every variant, and builds the regression design.
pub fn surrogate_design(
    index: &PositionalIndex,
    ranker: &dyn Ranker,
    query: &Query,
    docid: &str,
    params: &PointwiseParams,
) -> Result<SurrogateDesign> {
    params.validate()?;
    let doc = index.document(docid)?;
    let original = TermBag::from_tokens(&doc.tokens);
    if original.distinct_terms() < 2 {
        return Err(Error::contract(format!(
            "explanation undefined: {docid} has fewer than 2 distinct terms"
        )));
    }
    let perturbed = perturb(doc, index, &params.sampler)?;
    let weighted_query = query.weighted();
    let sigma2 = params.kernel_width * params.kernel_width;

    let unperturbed = PerturbedSample::from_mask(
        &doc.tokens,
        &perturbed.features,
        vec![true; doc.tokens.len()],
    );
    let samples = std::iter::once(&unperturbed).chain(perturbed.samples.iter());

    let mut rows = Vec::with_capacity(perturbed.samples.len() + 1);
    let mut scores = Vec::with_capacity(rows.capacity());
    let mut kernel_weights = Vec::with_capacity(rows.capacity());
    for s in samples {
        rows.push(
            s.feature_vector
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        );
        scores.push(ranker.score_bag(
            index,
            &weighted_query,
            &TermBag::from_tokens(&s.surviving_tokens),
        ));
        kernel_weights.push((-s.distance * s.distance / sigma2).exp());
    }
    Ok(SurrogateDesign {
        features: perturbed.features,
        rows,
        scores,
        kernel_weights,
        uniform_fallback: perturbed.uniform_fallback,
    })
}

fn explain_with_targets(
    design: &SurrogateDesign,
    targets: &[f64],
    params: &PointwiseParams,
) -> Result<ExplanationVector> {
    let fit = fit_weighted_ridge(&design.rows, targets, &design.kernel_weights, params.ridge)?;
    let entries = design
        .features
        .iter()
        .zip(&fit.coefficients)
        .map(|(t, &w)| TermWeight::new(t.clone(), w))
        .collect();
    Ok(ExplanationVector::new(entries)?.truncated(params.n_terms))
}

/// LIRME: local surrogate of the raw ranker score.
pub fn lirme_explain(
    index: &PositionalIndex,
    ranker: &dyn Ranker,
    query: &Query,
    docid: &str,
    params: &PointwiseParams,
) -> Result<ExplanationVector> {
    let design = surrogate_design(index, ranker, query, docid, params)?;
    explain_with_targets(&design, &design.scores, params)
}

/// Maps one score onto an EXS target relative to `base_list`.
pub fn exs_target(
    variant: ExsVariant,
    score: f64,
    base_list: &RankedList,
    exs_k: usize,
) -> Result<f64> {
    let entries = base_list.entries();
    if entries.len() < exs_k || exs_k == 0 {
        return Err(Error::contract(format!(
            "EXS needs a base list of at least exs_k={exs_k} entries, got {}",
            entries.len()
        )));
    }
    let top = entries[0].score;
    Ok(match variant {
        ExsVariant::TopkBinary => {
            if score > entries[exs_k - 1].score {
                1.0
            } else {
                0.0
            }
        }
        ExsVariant::ScoreRatio => {
            if top == 0.0 {
                if score >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (1.0 - (top - score) / top.abs()).clamp(0.0, 1.0)
            }
        }
        ExsVariant::RankBased => {
            let above = entries.iter().filter(|e| e.score > score).count();
            (1.0 - above as f64 / exs_k as f64).clamp(0.0, 1.0)
        }
    })
}

/// EXS: local surrogate of a ranking-aware target built from `base_list`.
pub fn exs_explain(
    index: &PositionalIndex,
    ranker: &dyn Ranker,
    query: &Query,
    docid: &str,
    params: &PointwiseParams,
    base_list: &RankedList,
) -> Result<ExplanationVector> {
    exs_target(params.exs_variant, 0.0, base_list, params.exs_k)?;
    let design = surrogate_design(index, ranker, query, docid, params)?;
    let targets = design
        .scores
        .iter()
        .map(|&s| exs_target(params.exs_variant, s, base_list, params.exs_k))
        .collect::<Result<Vec<_>>>()?;
    explain_with_targets(&design, &targets, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Text,
    Json,
}

const BAR_WIDTH: f64 = 40.0;

/// Renders an explanation as horizontal bars or as JSON.
pub fn visualize_terms(expl: &ExplanationVector, format: RenderFormat) -> String {
    match format {
        RenderFormat::Json => {
            serde_json::to_string(&serde_json::json!({ "terms": expl })).expect("serializable")
        }
        RenderFormat::Text => {
            let width = expl
                .entries()
                .iter()
                .map(|e| e.term.chars().count())
                .max()
                .unwrap_or(0);
            let max = expl
                .entries()
                .iter()
                .map(|e| e.weight.abs())
                .fold(0.0, f64::max);
            let mut out = String::new();
            for e in expl.entries() {
                let bar = if max > 0.0 {
                    (BAR_WIDTH * e.weight.abs() / max).round() as usize
                } else {
                    0
                };
                let sign = if e.weight < 0.0 { '-' } else { '+' };
                writeln!(
                    out,
                    "{:<width$} {}{:.4} {}",
                    e.term,
                    sign,
                    e.weight.abs(),
                    "#".repeat(bar)
                )
                .expect("writing to a String");
            }
            out
        }
    }
}

/// Serialized pointwise explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRecord {
    pub qid: String,
    pub docid: String,
    pub method: String,
    pub params: PointwiseParams,
    pub terms: ExplanationVector,
}
