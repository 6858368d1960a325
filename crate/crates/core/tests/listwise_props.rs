mod common;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use common::{generated_index, plain_index};
use proptest::prelude::*;
use rankex::evaluation::rbo;
use rankex::index::PositionalIndex;
use rankex::listwise::*;
use rankex::rankers::{
    rank, Bm25, Query, RankedList, Ranker, RankerParams, SimpleRankerKind, WeightedTerm,
};
use rankex::rng::XorShift64Star;
use rankex::synthetic::{vocab_word, CorpusSpec};
use rankex::Error;

struct Fixture {
    index: PositionalIndex,
    query: Query,
    list: RankedList,
    candidates: Vec<CandidateTerm>,
}

/// 50-doc Zipf corpus, a one-term query, and a list of 20 documents ranked by
/// BM25 over the query plus three hidden terms.
fn hidden_intent_fixture(seed: u64, n_candidates: usize) -> Fixture {
    let index = generated_index(&CorpusSpec::default(), seed);
    let mut rng = XorShift64Star::new(seed ^ 0x5eed);
    let word = |rng: &mut XorShift64Star| vocab_word(5 + rng.below(60));
    let query = Query::new("q", word(&mut rng), &index);
    let mut hidden = Vec::new();
    while hidden.len() < 3 {
        let w = word(&mut rng);
        if !hidden.contains(&w) && !query.terms.contains(&w) {
            hidden.push(w);
        }
    }
    let black_box = HiddenIntentRanker::new(
        Arc::new(Bm25::default()),
        hidden.into_iter().map(WeightedTerm::unit).collect(),
    )
    .unwrap();
    let all: Vec<&str> = index.docids().collect();
    let list = rank(&index, &black_box, "q", &query.weighted(), Some(&all), 20).unwrap();
    let candidates = generate_candidates(&index, &list, 10, n_candidates).unwrap();
    Fixture {
        index,
        query,
        list,
        candidates,
    }
}

use rankex::rankers::HiddenIntentRanker;

/// Fidelity computed without the oracle type: rank the list's documents for
/// query ∪ terms and compare with RBO.
fn direct_fidelity(f: &Fixture, ranker: &dyn Ranker, terms: &[&str], p: f64) -> f64 {
    let mut q = f.query.weighted();
    q.extend(terms.iter().map(|t| WeightedTerm::unit(*t)));
    let target = f.list.docids();
    let ranked = rank(&f.index, ranker, "q", &q, Some(&target), target.len()).unwrap();
    rbo(&ranked.docids(), &target, p).unwrap()
}

fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |l| l + 1);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Best subset by fidelity, then size, then lexicographic rank ids.
/// `generate_candidates` returns candidates in tie-rule order, so a
/// candidate's position is its rank id.
fn brute_force_best(f: &Fixture, ranker: &dyn Ranker, k: usize, p: f64) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for s in subsets_up_to(f.candidates.len(), k) {
        let terms: Vec<&str> = s.iter().map(|&i| f.candidates[i].term.as_str()).collect();
        let v = direct_fidelity(f, ranker, &terms, p);
        let better = match &best {
            None => true,
            Some((bs, bv)) => {
                v > *bv || (v == *bv && (s.len() < bs.len() || (s.len() == bs.len() && s < *bs)))
            }
        };
        if better {
            best = Some((s, v));
        }
    }
    best.unwrap()
}

fn pair(u: &str, l: &str, gap: u32) -> PreferencePair {
    PreferencePair {
        upper: u.into(),
        lower: l.into(),
        rank_gap: gap,
    }
}

fn cands(n: usize) -> Vec<CandidateTerm> {
    (0..n)
        .map(|i| CandidateTerm::new(format!("c{i:02}"), (n - i) as f64))
        .collect()
}

fn single_layer(layer: Vec<Vec<i8>>) -> PreferenceMatrix {
    let n_pairs = layer[0].len();
    let pairs = (0..n_pairs)
        .map(|p| pair(&format!("u{p}"), &format!("l{p}"), 1))
        .collect();
    PreferenceMatrix::from_layers(
        vec![SimpleRankerKind::Bm25],
        cands(layer.len()),
        pairs,
        vec![layer],
    )
    .unwrap()
}

fn brute_force_coverage(layer: &[Vec<i8>], k: usize) -> usize {
    let n_pairs = layer[0].len();
    subsets_up_to(layer.len(), k)
        .into_iter()
        .map(|s| {
            (0..n_pairs)
                .filter(|&p| s.iter().map(|&t| layer[t][p] as i32).sum::<i32>() > 0)
                .count()
        })
        .max()
        .unwrap()
}

// ---- candidates ----

#[test]
fn candidates_of_single_document() {
    let index = plain_index(&[("d1", "a a b"), ("d2", "c")]);
    let list = RankedList::from_docids("q", &["d1", "d2"]).unwrap();
    let c = generate_candidates(&index, &list, 1, 10).unwrap();
    let terms: Vec<&str> = c.iter().map(|c| c.term.as_str()).collect();
    assert_eq!(terms, ["a", "b"]);
    assert!((c[0].salience - 2.0 * index.idf("a")).abs() < 1e-12);

    let one = generate_candidates(&index, &list, 1, 1).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].term, "a");
}

#[test]
fn candidates_cover_top_documents_only() {
    let index = plain_index(&[("d1", "x y"), ("d2", "y z"), ("d3", "w")]);
    let list = RankedList::from_docids("q", &["d1", "d2", "d3"]).unwrap();
    let c = generate_candidates(&index, &list, 2, 100).unwrap();
    let terms: HashSet<&str> = c.iter().map(|c| c.term.as_str()).collect();
    assert_eq!(terms, HashSet::from(["x", "y", "z"]));
    // y's two occurrences do not outweigh its lower idf; x and z tie on salience
    let order: Vec<&str> = c.iter().map(|c| c.term.as_str()).collect();
    assert_eq!(order, ["x", "z", "y"]);
    assert!(matches!(
        generate_candidates(&index, &list, 4, 10),
        Err(Error::InvalidParameter(_))
    ));
    assert!(generate_candidates(&index, &list, 0, 10).is_err());
}

// ---- pairs ----

#[test]
fn two_document_list_has_one_pair() {
    let list = RankedList::from_docids("q", &["a", "b"]).unwrap();
    for s in [
        PairStrategy::Uniform,
        PairStrategy::RankGapWeighted,
        PairStrategy::TopVsRest,
    ] {
        let pairs = sample_pairs(&list, s, 5, &mut XorShift64Star::new(1)).unwrap();
        assert_eq!(pairs, vec![pair("a", "b", 1)]);
    }
}

#[test]
fn uniform_sampling_exhausts_and_stays_distinct() {
    let ids: Vec<String> = (0..8).map(|i| format!("d{i}")).collect();
    let list = RankedList::from_docids("q", &ids).unwrap();
    let all = sample_pairs(
        &list,
        PairStrategy::Uniform,
        1000,
        &mut XorShift64Star::new(3),
    )
    .unwrap();
    assert_eq!(all.len(), 28);
    let some = sample_pairs(
        &list,
        PairStrategy::Uniform,
        10,
        &mut XorShift64Star::new(3),
    )
    .unwrap();
    assert_eq!(some.len(), 10);
    let distinct: HashSet<_> = some
        .iter()
        .map(|p| (p.upper.clone(), p.lower.clone()))
        .collect();
    assert_eq!(distinct.len(), 10);
    let rank_of = |d: &str| ids.iter().position(|x| x == d).unwrap();
    for p in &some {
        assert!(rank_of(&p.upper) < rank_of(&p.lower));
        assert_eq!(p.rank_gap as usize, rank_of(&p.lower) - rank_of(&p.upper));
    }
}

#[test]
fn rank_gap_weighting_favors_wide_gaps() {
    let ids: Vec<String> = (0..20).map(|i| format!("d{i:02}")).collect();
    let list = RankedList::from_docids("q", &ids).unwrap();
    let mut rng = XorShift64Star::new(11);
    let mut by_gap = [0usize; 20];
    for _ in 0..10_000 {
        let p = &sample_pairs(&list, PairStrategy::RankGapWeighted, 1, &mut rng).unwrap()[0];
        by_gap[p.rank_gap as usize] += 1;
    }
    // Expected share of gap g is (20 − g)·g / Σ; per-pair frequency ∝ g.
    let per_pair = |g: usize| by_gap[g] as f64 / (20 - g) as f64;
    assert!(per_pair(15) > per_pair(5));
    assert!(per_pair(5) > per_pair(1));
    let total: f64 = (1..20).map(|g| ((20 - g) * g) as f64).sum();
    let expect_1 = 19.0 / total;
    assert!((by_gap[1] as f64 / 1e4 - expect_1).abs() < 0.01);
}

#[test]
fn top_vs_rest_upper_is_in_top_tenth() {
    let ids: Vec<String> = (0..25).map(|i| format!("d{i:02}")).collect();
    let list = RankedList::from_docids("q", &ids).unwrap();
    let pairs = sample_pairs(
        &list,
        PairStrategy::TopVsRest,
        1000,
        &mut XorShift64Star::new(2),
    )
    .unwrap();
    let tenth = 3; // ceil(25 / 10)
    assert_eq!(pairs.len(), (0..tenth).map(|i| 24 - i).sum::<usize>());
    for p in &pairs {
        assert!(ids[..tenth].contains(&p.upper));
    }
}

#[test]
fn pair_sampling_errors() {
    let one = RankedList::from_docids("q", &["a"]).unwrap();
    assert!(matches!(
        sample_pairs(&one, PairStrategy::Uniform, 1, &mut XorShift64Star::new(0)),
        Err(Error::Contract(_))
    ));
    let two = RankedList::from_docids("q", &["a", "b"]).unwrap();
    assert!(sample_pairs(&two, PairStrategy::Uniform, 0, &mut XorShift64Star::new(0)).is_err());
    assert!("sideways".parse::<PairStrategy>().is_err());
    assert_eq!(
        "top_vs_rest".parse::<PairStrategy>().unwrap(),
        PairStrategy::TopVsRest
    );
}

// ---- matrix ----

#[test]
fn matrix_entries_follow_score_differences() {
    let index = plain_index(&[("u", "a b"), ("l", "b c"), ("o", "d")]);
    let pairs = vec![pair("u", "l", 1)];
    let terms = vec![
        CandidateTerm::new("a", 3.0),
        CandidateTerm::new("b", 2.0),
        CandidateTerm::new("c", 1.0),
        CandidateTerm::new("d", 0.5),
    ];
    let kinds = [SimpleRankerKind::Bm25, SimpleRankerKind::LmJm];
    let m =
        build_preference_matrix(&index, &kinds, &RankerParams::default(), &terms, &pairs).unwrap();
    for r in 0..2 {
        assert_eq!(m.entry(r, 0, 0), 1, "upper-only term");
        assert_eq!(m.entry(r, 1, 0), 0, "shared term, equal lengths");
        assert_eq!(m.entry(r, 2, 0), -1, "lower-only term");
        assert_eq!(m.entry(r, 3, 0), 0, "absent term");
    }
    assert!(
        build_preference_matrix(&index, &kinds, &RankerParams::default(), &[], &pairs).is_err()
    );
}

#[test]
fn consensus_is_sign_of_sum() {
    let pairs = [pair("u", "l", 1)];
    let kinds = SimpleRankerKind::ALL.to_vec();
    let layers = vec![vec![vec![1, -1]], vec![vec![1, 0]], vec![vec![-1, 0]]];
    let pairs2 = vec![pairs[0].clone(), pair("x", "y", 2)];
    let m = PreferenceMatrix::from_layers(kinds.clone(), cands(1), pairs2.clone(), layers).unwrap();
    assert_eq!(m.consensus(0, 0), 1);
    assert_eq!(m.consensus(0, 1), -1);
    assert_eq!(
        m.restrict(SimpleRankerKind::LmJm).unwrap().entry(0, 0, 1),
        0
    );

    let bad = vec![vec![vec![2, 0]], vec![vec![0, 0]], vec![vec![0, 0]]];
    assert!(PreferenceMatrix::from_layers(kinds.clone(), cands(1), pairs2.clone(), bad).is_err());
    let short = vec![vec![vec![1, 0]]];
    assert!(PreferenceMatrix::from_layers(kinds, cands(1), pairs2, short).is_err());
}

// ---- coverage explainers ----

#[test]
fn one_term_covering_everything_is_enough() {
    let m = single_layer(vec![vec![1, 1, 1, 1], vec![1, 0, 0, 0], vec![0, 1, -1, 0]]);
    let e = intent_exs_explain(&m, 1, 5).unwrap();
    assert_eq!(e.terms, ["c00"]);
    assert_eq!(e.fidelity["coverage"], 1.0);
}

#[test]
fn disjoint_halves_need_two_terms() {
    let m = single_layer(vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1], vec![1, 0, 0, 0]]);
    let e = intent_exs_explain(&m, 1, 5).unwrap();
    assert_eq!(e.terms, ["c00", "c01"]);
    assert_eq!(e.trace, [0.5, 1.0]);
}

#[test]
fn zero_coverage_is_reported() {
    let m = single_layer(vec![vec![0, -1], vec![0, 0]]);
    let e = intent_exs_explain(&m, 0, 5).unwrap();
    assert!(e.terms.is_empty());
    assert_eq!(e.fidelity["coverage"], 0.0);
    assert!(e.diagnostics.iter().any(|d| d.contains("zero coverage")));
}

#[test]
fn min_terms_are_forced_and_max_caps() {
    let m = single_layer(vec![vec![1, 1], vec![0, 0], vec![0, 0]]);
    assert_eq!(intent_exs_explain(&m, 1, 5).unwrap().terms.len(), 1);
    assert_eq!(intent_exs_explain(&m, 3, 5).unwrap().terms.len(), 3);
    let wide = single_layer(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    assert_eq!(intent_exs_explain(&wide, 0, 2).unwrap().terms.len(), 2);
    assert!(intent_exs_explain(&m, 3, 2).is_err());
}

#[test]
fn ties_go_to_salience_then_term() {
    let pairs = vec![pair("u", "l", 1)];
    let terms = vec![
        CandidateTerm::new("zeta", 1.0),
        CandidateTerm::new("beta", 1.0),
        CandidateTerm::new("alpha", 0.5),
    ];
    let m = PreferenceMatrix::from_layers(
        vec![SimpleRankerKind::Bm25],
        terms,
        pairs,
        vec![vec![vec![1], vec![1], vec![1]]],
    )
    .unwrap();
    assert_eq!(intent_exs_explain(&m, 1, 1).unwrap().terms, ["beta"]);
}

#[test]
fn single_ranker_multiplex_equals_intent() {
    let f = hidden_intent_fixture(3, 12);
    let pairs = sample_pairs(
        &f.list,
        PairStrategy::Uniform,
        20,
        &mut XorShift64Star::new(3),
    )
    .unwrap();
    let m = build_preference_matrix(
        &f.index,
        &[SimpleRankerKind::Bm25],
        &RankerParams::default(),
        &f.candidates,
        &pairs,
    )
    .unwrap();
    let a = intent_exs_explain(&m, 1, 4).unwrap();
    let b = multiplex_explain(&m, 1, 4).unwrap();
    assert_eq!(a.terms, b.terms);
    assert_eq!(a.fidelity, b.fidelity);

    let multi = build_preference_matrix(
        &f.index,
        &SimpleRankerKind::ALL,
        &RankerParams::default(),
        &f.candidates,
        &pairs,
    )
    .unwrap();
    assert!(intent_exs_explain(&multi, 1, 4).is_err());
}

#[test]
fn greedy_coverage_meets_the_approximation_bound() {
    let bound = 1.0 - (-1.0f64).exp();
    let mut rng = XorShift64Star::new(77);
    for trial in 0..200 {
        let n_terms = 2 + rng.below(11);
        let n_pairs = 1 + rng.below(20);
        let layer: Vec<Vec<i8>> = (0..n_terms)
            .map(|_| (0..n_pairs).map(|_| rng.below(3) as i8 - 1).collect())
            .collect();
        let k = 1 + rng.below(4);
        let e = intent_exs_explain(&single_layer(layer.clone()), 0, k).unwrap();
        let got = e.fidelity["coverage"] * n_pairs as f64;
        let opt = brute_force_coverage(&layer, k) as f64;
        // Signed coverage is not submodular, so the bound is checked, not assumed.
        assert!(
            got + 1e-9 >= bound * opt,
            "trial {trial}: greedy {got} vs optimum {opt}"
        );
    }
}

#[test]
fn greedy_coverage_bound_on_real_matrices() {
    let bound = 1.0 - (-1.0f64).exp();
    for seed in 0..20 {
        let f = hidden_intent_fixture(seed, 12);
        let pairs = sample_pairs(
            &f.list,
            PairStrategy::Uniform,
            20,
            &mut XorShift64Star::new(seed),
        )
        .unwrap();
        let m = build_preference_matrix(
            &f.index,
            &[SimpleRankerKind::Bm25],
            &RankerParams::default(),
            &f.candidates,
            &pairs,
        )
        .unwrap();
        let layer: Vec<Vec<i8>> = (0..m.terms().len())
            .map(|t| (0..pairs.len()).map(|p| m.entry(0, t, p)).collect())
            .collect();
        for k in 1..=4 {
            let e = intent_exs_explain(&m, 0, k).unwrap();
            let got = e.fidelity["coverage"] * pairs.len() as f64;
            let opt = brute_force_coverage(&layer, k) as f64;
            assert!(
                got + 1e-9 >= bound * opt,
                "seed {seed} k {k}: {got} < (1-1/e)·{opt}"
            );
        }
    }
}

// ---- fidelity search ----

#[test]
fn oracle_counts_and_matches_direct_fidelity() {
    let f = hidden_intent_fixture(1, 10);
    let bm25 = Bm25::default();
    let mut oracle = FidelityOracle::new(&f.index, &bm25, &f.query, &f.list, 0.9).unwrap();
    let t = [f.candidates[0].term.as_str()];
    assert_eq!(
        oracle.score(&t).unwrap(),
        direct_fidelity(&f, &bm25, &t, 0.9)
    );
    assert_eq!(oracle.evaluations(), 0);
    oracle.fidelity(&t).unwrap();
    assert_eq!(oracle.evaluations(), 1);
    let reranked = oracle.rerank(&t).unwrap();
    let mut a = reranked.docids();
    let mut b = f.list.docids();
    a.sort();
    b.sort();
    assert_eq!(a, b);

    assert!(FidelityOracle::new(&f.index, &bm25, &f.query, &f.list, 1.0).is_err());
    let short = f.list.truncated(1);
    assert!(FidelityOracle::new(&f.index, &bm25, &f.query, &short, 0.9).is_err());
}

#[test]
fn greedy_trace_is_monotone_and_beats_single_terms() {
    let bm25 = Bm25::default();
    for seed in 0..10 {
        let f = hidden_intent_fixture(seed, 30);
        let e = greedy_explain(&f.index, &bm25, &f.query, &f.list, &f.candidates, 10, 0.9).unwrap();
        assert!(
            e.trace.windows(2).all(|w| w[1] > w[0]),
            "seed {seed}: {:?}",
            e.trace
        );
        assert_eq!(e.trace.len(), e.terms.len() + 1);
        let best_single = f
            .candidates
            .iter()
            .map(|c| direct_fidelity(&f, &bm25, &[c.term.as_str()], 0.9))
            .fold(f64::MIN, f64::max);
        assert!(e.fidelity["rbo@0.9"] >= best_single);
        let terms: Vec<&str> = e.terms.iter().map(String::as_str).collect();
        let mut canon: Vec<&CandidateTerm> = f
            .candidates
            .iter()
            .filter(|c| terms.contains(&c.term.as_str()))
            .collect();
        canon.sort_by(|a, b| b.salience.total_cmp(&a.salience).then(a.term.cmp(&b.term)));
        let canon: Vec<&str> = canon.iter().map(|c| c.term.as_str()).collect();
        assert!((e.fidelity["rbo@0.9"] - direct_fidelity(&f, &bm25, &canon, 0.9)).abs() < 1e-12);
    }
}

#[test]
fn greedy_edge_cases() {
    let f = hidden_intent_fixture(2, 10);
    let bm25 = Bm25::default();
    let none = greedy_explain(&f.index, &bm25, &f.query, &f.list, &f.candidates, 0, 0.9).unwrap();
    assert!(none.terms.is_empty());
    assert_eq!(none.evaluations, 0);
    assert_eq!(
        none.fidelity["rbo@0.9"],
        direct_fidelity(&f, &bm25, &[], 0.9)
    );

    let absent = vec![
        CandidateTerm::new("zzz-nowhere", 1.0),
        CandidateTerm::new("qqq-nowhere", 0.5),
    ];
    let e = greedy_explain(&f.index, &bm25, &f.query, &f.list, &absent, 5, 0.9).unwrap();
    assert!(e.terms.is_empty());
    assert_eq!(e.evaluations, 2);

    let dup = vec![CandidateTerm::new("a", 1.0), CandidateTerm::new("a", 0.5)];
    assert!(greedy_explain(&f.index, &bm25, &f.query, &f.list, &dup, 5, 0.9).is_err());
    assert!(greedy_explain(&f.index, &bm25, &f.query, &f.list, &[], 5, 0.9).is_err());
}

#[test]
fn exhaustive_bfs_equals_brute_force() {
    let bm25 = Bm25::default();
    for seed in 0..5 {
        let f = hidden_intent_fixture(seed, 12);
        let (best, value) = brute_force_best(&f, &bm25, 3, 0.9);
        let e = bfs_explain(
            &f.index,
            &bm25,
            &f.query,
            &f.list,
            &f.candidates,
            3,
            0.9,
            1_000_000,
        )
        .unwrap();
        let expected: Vec<String> = best.iter().map(|&i| f.candidates[i].term.clone()).collect();
        assert_eq!(e.terms, expected, "seed {seed}");
        assert_eq!(e.fidelity["rbo@0.9"], value, "seed {seed}");
        assert_eq!(e.evaluations, subsets_up_to(12, 3).len() - 1);
    }
}

#[test]
fn bfs_budget_of_one_layer_finds_best_single_term() {
    let bm25 = Bm25::default();
    for seed in 0..5 {
        let f = hidden_intent_fixture(seed, 15);
        let e = bfs_explain(
            &f.index,
            &bm25,
            &f.query,
            &f.list,
            &f.candidates,
            1,
            0.9,
            f.candidates.len(),
        )
        .unwrap();
        let (best, value) = brute_force_best(&f, &bm25, 1, 0.9);
        assert_eq!(e.fidelity["rbo@0.9"], value);
        assert_eq!(e.terms.len(), best.len());
        assert_eq!(e.evaluations, f.candidates.len());
    }
}

#[test]
fn bfs_respects_budget_and_dominates_greedy_at_equal_depth() {
    let bm25 = Bm25::default();
    for seed in 0..20 {
        let f = hidden_intent_fixture(seed, 20);
        let g = greedy_explain(&f.index, &bm25, &f.query, &f.list, &f.candidates, 1, 0.9).unwrap();
        let b = bfs_explain(
            &f.index,
            &bm25,
            &f.query,
            &f.list,
            &f.candidates,
            3,
            0.9,
            300,
        )
        .unwrap();
        assert!(b.evaluations <= 300);
        assert!(
            b.fidelity["rbo@0.9"] >= g.fidelity["rbo@0.9"],
            "seed {seed}"
        );
    }
    let f = hidden_intent_fixture(0, 5);
    assert!(bfs_explain(&f.index, &bm25, &f.query, &f.list, &f.candidates, 3, 0.9, 0).is_err());
}

// ---- show_matrix ----

#[test]
fn show_matrix_views_and_json_round_trip() {
    let f = hidden_intent_fixture(4, 6);
    let pairs = sample_pairs(
        &f.list,
        PairStrategy::Uniform,
        5,
        &mut XorShift64Star::new(4),
    )
    .unwrap();
    let m = build_preference_matrix(
        &f.index,
        &SimpleRankerKind::ALL,
        &RankerParams::default(),
        &f.candidates,
        &pairs,
    )
    .unwrap();
    let grid = show_matrix(&m, None).unwrap();
    assert_eq!(grid.lines().count(), 1 + f.candidates.len());
    assert!(grid.lines().next().unwrap().contains(&pairs[0].to_string()));

    let column = show_matrix(&m, Some(&pairs[2])).unwrap();
    assert!(column.starts_with(&format!("pair {}", pairs[2])));
    assert!(column.contains("consensus"));
    assert!(matches!(
        show_matrix(&m, Some(&pair("nope", "never", 1))),
        Err(Error::Contract(_))
    ));

    let text = serde_json::to_string(&m.to_json()).unwrap();
    let back = PreferenceMatrix::from_json(serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back, m);
    assert_eq!(show_matrix(&back, None).unwrap(), grid);

    let mut forged = m.to_json();
    forged.entries[0][0] = if forged.entries[0][0] == 1 { -1 } else { 1 };
    assert!(PreferenceMatrix::from_json(forged).is_err());
}

// ---- pipeline ----

#[test]
fn explain_all_matches_single_calls_and_isolates_failures() {
    let f = hidden_intent_fixture(6, 30);
    let q2 = Query::new("q2", vocab_word(7), &f.index);
    let q3 = Query::new("q3", vocab_word(8), &f.index);
    let mut runs = BTreeMap::new();
    runs.insert("q".to_string(), f.list.clone());
    runs.insert("q3".to_string(), f.list.truncated(1));
    let queries = vec![f.query.clone(), q2, q3];
    let params = ListwiseParams {
        m_max: 3,
        eval_budget: 100,
        ..ListwiseParams::default()
    };
    for method in [
        ListwiseMethod::Multiplex,
        ListwiseMethod::Intent,
        ListwiseMethod::Greedy,
        ListwiseMethod::Bfs,
    ] {
        let all = explain_all(method, &f.index, &queries, &runs, &params);
        assert_eq!(all.keys().collect::<Vec<_>>(), ["q", "q2", "q3"]);
        let single = explain_query(method, &f.index, &f.query, &f.list, &params).unwrap();
        assert_eq!(all["q"].as_ref().unwrap(), &single);
        assert_eq!(single.qid, "q");
        assert!(single.fidelity.contains_key("rbo@0.9"));
        assert!(all["q2"].as_ref().unwrap_err().contains("q2"));
        assert!(all["q3"].is_err());
    }
    assert!(explain_all(ListwiseMethod::Greedy, &f.index, &[], &runs, &params).is_empty());
}

#[test]
fn explanation_json_has_the_published_keys() {
    let f = hidden_intent_fixture(8, 10);
    let params = ListwiseParams {
        m_max: 2,
        ..ListwiseParams::default()
    };
    let e = explain_query(ListwiseMethod::Bfs, &f.index, &f.query, &f.list, &params).unwrap();
    let v: serde_json::Value = serde_json::to_value(&e).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["qid", "method", "terms", "fidelity", "evaluations"] {
        assert!(keys.contains(&k), "{k}");
    }
    assert!(v["fidelity"]["rbo@0.9"].is_f64());
    assert_eq!(
        "IntentEXS".parse::<ListwiseMethod>().unwrap(),
        ListwiseMethod::Intent
    );
    assert!("dct".parse::<ListwiseMethod>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn explainers_are_deterministic(seed in 0u64..1000) {
        let f = hidden_intent_fixture(seed, 12);
        let params = ListwiseParams { m_max: 3, eval_budget: 60, seed, ..ListwiseParams::default() };
        for method in [ListwiseMethod::Multiplex, ListwiseMethod::Intent, ListwiseMethod::Greedy, ListwiseMethod::Bfs] {
            let a = explain_query(method, &f.index, &f.query, &f.list, &params).unwrap();
            let b = explain_query(method, &f.index, &f.query, &f.list, &params).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.terms.len() <= 3);
            let r = a.fidelity["rbo@0.9"];
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn sampled_pairs_are_ordered_and_distinct(n in 2usize..30, count in 1usize..60, seed in any::<u64>(), s in 0usize..3) {
        let strategy = [PairStrategy::Uniform, PairStrategy::RankGapWeighted, PairStrategy::TopVsRest][s];
        let ids: Vec<String> = (0..n).map(|i| format!("d{i:02}")).collect();
        let list = RankedList::from_docids("q", &ids).unwrap();
        let pairs = sample_pairs(&list, strategy, count, &mut XorShift64Star::new(seed)).unwrap();
        let uppers = if strategy == PairStrategy::TopVsRest { n.div_ceil(10) } else { n - 1 };
        let available: usize = (0..uppers).map(|i| n - 1 - i).sum();
        prop_assert_eq!(pairs.len(), count.min(available));
        let set: HashSet<_> = pairs.iter().map(|p| (&p.upper, &p.lower)).collect();
        prop_assert_eq!(set.len(), pairs.len());
        for p in &pairs {
            prop_assert!(p.upper < p.lower);
        }
    }
}
