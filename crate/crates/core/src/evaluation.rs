//! Rank-similarity measures and pointwise explanation quality.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::index::PositionalIndex;
use crate::pointwise::ExplanationVector;
use crate::rankers::{LmJm, Query, RankedList, Ranker};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSimilarityReport {
    pub measure: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub depth: usize,
}

fn check_distinct<T: Eq + Hash>(list: &[T], which: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(list.len());
    if list.iter().all(|x| seen.insert(x)) {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "{which} list contains repeated items"
        )))
    }
}

/// Extrapolated rank-biased overlap at depth `k = min(|a|, |b|)`:
///
/// `(1-p) Σ_{d=1..k} p^{d-1} A_d + A_k p^k`, with `A_d` the fraction of items
/// shared by the two depth-`d` prefixes.
pub fn rbo<T: Eq + Hash>(a: &[T], b: &[T], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!(
            "rbo persistence must lie in (0,1), got {p}"
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::contract("rbo of an empty list"));
    }
    check_distinct(a, "first")?;
    check_distinct(b, "second")?;

    let k = a.len().min(b.len());
    let mut seen_a = HashSet::with_capacity(k);
    let mut seen_b = HashSet::with_capacity(k);
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut weight = 1.0;
    let mut agreement = 0.0;
    for d in 0..k {
        let (x, y) = (&a[d], &b[d]);
        if x == y {
            overlap += 1;
        } else {
            overlap += usize::from(seen_b.contains(x)) + usize::from(seen_a.contains(y));
        }
        seen_a.insert(x);
        seen_b.insert(y);
        agreement = overlap as f64 / (d + 1) as f64;
        sum += weight * agreement;
        weight *= p;
    }
    // `weight` is now p^k.
    Ok(((1.0 - p) * sum + agreement * weight).clamp(0.0, 1.0))
}

/// Items present in both lists, as rank positions within each list's
/// induced ordering of the shared items.
fn shared_ranks<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<Vec<(usize, usize)>> {
    check_distinct(a, "first")?;
    check_distinct(b, "second")?;
    let in_b: HashMap<&T, usize> = b.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut pairs: Vec<(usize, usize)> = a
        .iter()
        .filter_map(|x| in_b.get(x).copied())
        .enumerate()
        .collect();
    if pairs.len() < 2 {
        return Err(Error::contract(
            "undefined correlation: fewer than 2 shared items",
        ));
    }
    // Re-rank b-positions densely within the shared set.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&i| pairs[i].1);
    for (dense, &i) in order.iter().enumerate() {
        pairs[i].1 = dense;
    }
    Ok(pairs)
}

/// Kendall's τ over the intersection of the two lists.
pub fn kendall_tau<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64> {
    let ranks = shared_ranks(a, b)?;
    let n = ranks.len();
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let da = ranks[i].0 as i64 - ranks[j].0 as i64;
            let db = ranks[i].1 as i64 - ranks[j].1 as i64;
            score += (da * db).signum();
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}

/// Spearman's ρ over the intersection of the two lists.
pub fn spearman_rho<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64> {
    let ranks = shared_ranks(a, b)?;
    let n = ranks.len() as f64;
    let d2: f64 = ranks
        .iter()
        .map(|&(x, y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
}

/// Jaccard similarity of the two depth-`k` prefixes.
pub fn jaccard_at_k<T: Eq + Hash>(a: &[T], b: &[T], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("jaccard depth must be >= 1"));
    }
    let sa: HashSet<&T> = a.iter().take(k).collect();
    let sb: HashSet<&T> = b.iter().take(k).collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return Ok(1.0);
    }
    Ok(sa.intersection(&sb).count() as f64 / union as f64)
}

/// Normalized term weights used as ground truth for pointwise correctness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTerms {
    weights: BTreeMap<String, f64>,
}

impl GroundTruthTerms {
    /// Normalizes `weights` to sum to one. Rejects negative, non-finite or
    /// all-zero input.
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self> {
        if weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::contract(
                "ground-truth weights must be finite and >= 0",
            ));
        }
        let total: f64 = weights.values().sum();
        if !(total > 0.0) {
            return Err(Error::contract(
                "degenerate ground truth: all weights are zero",
            ));
        }
        Ok(GroundTruthTerms {
            weights: weights.into_iter().map(|(t, w)| (t, w / total)).collect(),
        })
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn get(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Unnormalized relevance-model weight of every vocabulary term:
/// `Σ_{D ∈ top_n} P_JM(t|D) · exp(score_JM(Q, D) - max score)`.
///
/// The shift by the maximum query score keeps `exp` in range and does not
/// change the normalized distribution.
pub fn lmjm_expansion_weights(
    index: &PositionalIndex,
    query: &Query,
    list: &RankedList,
    top_n: usize,
    lambda: f64,
) -> Result<BTreeMap<String, f64>> {
    if top_n == 0 || list.len() < top_n {
        return Err(Error::contract(format!(
            "need 1 <= top_n <= |L|, got top_n={top_n}, |L|={}",
            list.len()
        )));
    }
    let lm = LmJm::new(lambda)?;
    let weighted = query.weighted();
    let top: Vec<&str> = list.docids().into_iter().take(top_n).collect();
    let scores: Vec<f64> = top
        .iter()
        .map(|d| lm.score(index, &weighted, d))
        .collect::<Result<_>>()?;
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let priors: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let bags = top
        .iter()
        .map(|d| index.bag(d))
        .collect::<Result<Vec<_>>>()?;

    let mut out = BTreeMap::new();
    for term in index.terms() {
        let w: f64 = bags
            .iter()
            .zip(&priors)
            .map(|(bag, prior)| lm.term_probability(index, term, bag) * prior)
            .sum();
        out.insert(term.to_string(), w);
    }
    Ok(out)
}

/// Relevance-model expansion terms under Jelinek-Mercer smoothing, keeping
/// the `n_terms` heaviest (ties broken lexicographically) and renormalizing.
pub fn lmjm_ground_truth(
    index: &PositionalIndex,
    query: &Query,
    list: &RankedList,
    top_n: usize,
    lambda: f64,
    n_terms: usize,
) -> Result<GroundTruthTerms> {
    if n_terms == 0 {
        return Err(Error::param("n_terms must be >= 1"));
    }
    let weights = lmjm_expansion_weights(index, query, list, top_n, lambda)?;
    let mut ranked: Vec<(String, f64)> = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n_terms);
    GroundTruthTerms::new(ranked.into_iter().collect())
}

/// Pearson correlation between explanation weights and ground-truth weights
/// over the union of their terms (missing entries count as zero).
pub fn pointwise_correctness(expl: &ExplanationVector, truth: &GroundTruthTerms) -> Result<f64> {
    if expl.is_empty() || truth.is_empty() {
        return Err(Error::contract(
            "correctness needs non-empty explanation and ground truth",
        ));
    }
    let mut terms: Vec<&str> = expl.terms().collect();
    terms.extend(truth.weights().keys().map(String::as_str));
    terms.sort_unstable();
    terms.dedup();
    let xs: Vec<f64> = terms
        .iter()
        .map(|t| expl.weight(t).unwrap_or(0.0))
        .collect();
    let ys: Vec<f64> = terms.iter().map(|t| truth.get(t)).collect();
    pearson(&xs, &ys)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::contract("correlation undefined: zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean pairwise Jaccard similarity of the explanations' top-`m` term sets.
pub fn pointwise_consistency(expls: &[ExplanationVector], m: usize) -> Result<f64> {
    if expls.len() < 2 {
        return Err(Error::contract(
            "consistency needs at least two explanations",
        ));
    }
    if m == 0 {
        return Err(Error::param("m must be >= 1"));
    }
    if expls.iter().any(|e| e.is_empty()) {
        return Err(Error::contract("consistency: explanation without terms"));
    }
    let sets: Vec<Vec<&str>> = expls.iter().map(|e| e.terms().take(m).collect()).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            total += jaccard_at_k(&sets[i], &sets[j], m)?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointwise::TermWeight;

    #[test]
    fn rbo_basic_cases() {
        assert_eq!(rbo(&["a", "b", "c"], &["a", "b", "c"], 0.9).unwrap(), 1.0);
        assert_eq!(rbo(&["a", "b"], &["c", "d"], 0.9).unwrap(), 0.0);
        let swapped = rbo(&["a", "b"], &["b", "a"], 0.9).unwrap();
        assert!((swapped - 0.90).abs() < 1e-12);
    }

    #[test]
    fn rbo_rejects_bad_input() {
        assert!(rbo::<&str>(&[], &["a"], 0.9).is_err());
        assert!(rbo(&["a"], &["a"], 1.0).is_err());
        assert!(rbo(&["a", "a"], &["a", "b"], 0.5).is_err());
    }

    #[test]
    fn rbo_grows_with_p_when_lists_differ_below_top() {
        let a = ["x", "a", "b", "c"];
        let b = ["x", "c", "b", "a"];
        let lo = rbo(&a, &b, 0.5).unwrap();
        let hi = rbo(&a, &b, 0.9).unwrap();
        assert!(hi > lo, "{lo} {hi}");
    }

    #[test]
    fn tau_and_rho_hand_cases() {
        let a = ["a", "b", "c"];
        assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
        assert_eq!(kendall_tau(&a, &["c", "b", "a"]).unwrap(), -1.0);
        assert!((kendall_tau(&a, &["a", "c", "b"]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(spearman_rho(&a, &a).unwrap(), 1.0);
        assert_eq!(spearman_rho(&a, &["c", "b", "a"]).unwrap(), -1.0);
        assert!((spearman_rho(&a, &["a", "c", "b"]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn correlations_use_the_intersection() {
        assert!(kendall_tau(&["a", "x"], &["a", "y"]).is_err());
        let t = kendall_tau(&["a", "x", "b"], &["b", "y", "a"]).unwrap();
        assert_eq!(t, -1.0);
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard_at_k(&["a", "b"], &["a", "b"], 2).unwrap(), 1.0);
        assert_eq!(jaccard_at_k(&["a", "b"], &["c", "d"], 2).unwrap(), 0.0);
        assert!((jaccard_at_k(&["a", "b"], &["a", "c"], 2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard_at_k(&["a"], &["a", "b"], 5).unwrap(), 0.5);
    }

    fn vector(pairs: &[(&str, f64)]) -> ExplanationVector {
        ExplanationVector::new(pairs.iter().map(|(t, w)| TermWeight::new(*t, *w)).collect())
            .unwrap()
    }

    #[test]
    fn correctness_is_pearson() {
        let truth = GroundTruthTerms::new(
            [("a", 0.5), ("b", 0.3), ("c", 0.2)]
                .iter()
                .map(|(t, w)| (t.to_string(), *w))
                .collect(),
        )
        .unwrap();
        let scaled = vector(&[("a", 5.0), ("b", 3.0), ("c", 2.0)]);
        assert!((pointwise_correctness(&scaled, &truth).unwrap() - 1.0).abs() < 1e-12);
        let negated = vector(&[("a", -0.5), ("b", -0.3), ("c", -0.2)]);
        assert!((pointwise_correctness(&negated, &truth).unwrap() + 1.0).abs() < 1e-12);
        // x = (1, 0, 0), y = (0.5, 0.3, 0.2): means 1/3 and 1/3,
        // sxy = 1/6, sxx = 2/3, syy = 7/150.
        let hand = vector(&[("a", 1.0)]);
        let expected = (1.0 / 6.0) / ((2.0f64 / 3.0).sqrt() * (7.0f64 / 150.0).sqrt());
        assert!((pointwise_correctness(&hand, &truth).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn consistency_cases() {
        let a = vector(&[("x", 3.0), ("y", 2.0)]);
        let b = vector(&[("p", 3.0), ("q", 2.0)]);
        let c = vector(&[("x", 1.0), ("z", 0.5)]);
        assert_eq!(
            pointwise_consistency(&[a.clone(), a.clone(), a.clone()], 2).unwrap(),
            1.0
        );
        assert_eq!(
            pointwise_consistency(&[a.clone(), b.clone()], 2).unwrap(),
            0.0
        );
        // Pairs: (a,a)=1, (a,c)=1/3, (a,c)=1/3.
        let mean = pointwise_consistency(&[a.clone(), a.clone(), c], 2).unwrap();
        assert!((mean - (1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!(pointwise_consistency(&[a], 2).is_err());
    }

    #[test]
    fn ground_truth_normalizes() {
        let gt =
            GroundTruthTerms::new([("a".to_string(), 2.0), ("b".to_string(), 6.0)].into()).unwrap();
        assert!((gt.get("b") - 0.75).abs() < 1e-15);
        assert!(GroundTruthTerms::new([("a".to_string(), 0.0)].into()).is_err());
    }
}
