//! The three `explain` subcommands.

use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use rankex::axioms::{explain_details, AggregatedAxiom, AggregationMode, Axiom, PairwiseAxiom};
use rankex::listwise::{explain_all, explain_query, ListwiseMethod, ListwiseParams, PairStrategy};
use rankex::perturbation::SamplerKind;
use rankex::pointwise::{
    exs_explain, lirme_explain, visualize_terms, ExsVariant, PointwiseParams, PointwiseRecord,
    RenderFormat,
};
use rankex::rankers::{RankedList, SimpleRankerKind};
use serde_json::json;

use crate::params::{resolve, set};
use crate::{
    build_model, emit, load_index, load_run, load_topic_map, model_list, parse_name, topic_query,
    CliError, CliResult, ModelArgs,
};

#[derive(Args)]
pub struct PointwiseArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    qid: String,
    #[arg(long)]
    docid: String,
    /// lirme or exs.
    #[arg(long, default_value = "lirme")]
    method: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Base list for EXS; the model's ranking when absent.
    #[arg(long)]
    run: Option<PathBuf>,
    /// JSON parameter file; flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// random, masking or tfidf.
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    chunk: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    kernel_width: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    n_terms: Option<usize>,
    /// topk_binary, score_ratio or rank_based.
    #[arg(long)]
    exs_variant: Option<String>,
    #[arg(long)]
    exs_k: Option<usize>,
    /// json or text.
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PairwiseArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    qid: String,
    #[arg(long)]
    d1: String,
    #[arg(long)]
    d2: String,
    /// Comma-separated axiom names; all axioms when absent.
    #[arg(long, value_delimiter = ',')]
    axioms: Vec<String>,
    /// Also combine the axioms: weighted_sum_sign or majority.
    #[arg(long)]
    aggregate: Option<String>,
    /// Print the diagnostic table of every axiom that has one.
    #[arg(long)]
    details: bool,
    /// json or text; text by default with --details.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ListwiseArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    /// multiplex, intent, greedy or bfs.
    #[arg(long, default_value = "greedy")]
    method: String,
    /// TREC run holding the lists to explain; the model ranks when absent.
    #[arg(long)]
    run: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, conflicts_with = "all")]
    qid: Option<String>,
    /// Explain every topic.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    n_candidates: Option<usize>,
    #[arg(long)]
    n_pairs: Option<usize>,
    /// uniform, rank_gap_weighted or top_vs_rest.
    #[arg(long)]
    pair_strategy: Option<String>,
    #[arg(long)]
    m_min: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    /// RBO persistence of the fidelity objective.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    eval_budget: Option<usize>,
    /// Ranker re-scoring the expanded query.
    #[arg(long)]
    simple_ranker: Option<String>,
    /// Comma-separated rankers whose consensus Multiplex covers.
    #[arg(long, value_delimiter = ',')]
    simple_rankers: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn render_format(s: &str) -> CliResult<RenderFormat> {
    match s {
        "json" => Ok(RenderFormat::Json),
        "text" => Ok(RenderFormat::Text),
        _ => Err(CliError::usage(format!(
            "unknown format `{s}`; valid: json, text"
        ))),
    }
}

pub fn pointwise(args: PointwiseArgs) -> CliResult<()> {
    let method = args.method.to_ascii_lowercase();
    if method != "lirme" && method != "exs" {
        return Err(CliError::usage(format!(
            "unknown pointwise method `{}`; valid: lirme, exs",
            args.method
        )));
    }
    let format = render_format(&args.format)?;
    let mut o = Vec::new();
    set(&mut o, "sampler.seed", args.seed);
    set(
        &mut o,
        "sampler.kind",
        args.sampler
            .as_deref()
            .map(parse_name::<SamplerKind>)
            .transpose()?,
    );
    set(&mut o, "sampler.rate", args.rate);
    set(&mut o, "sampler.chunk", args.chunk);
    set(&mut o, "sampler.n_samples", args.n_samples);
    set(&mut o, "kernel_width", args.kernel_width);
    set(&mut o, "ridge", args.ridge);
    set(&mut o, "n_terms", args.n_terms);
    set(
        &mut o,
        "exs_variant",
        args.exs_variant
            .as_deref()
            .map(parse_name::<ExsVariant>)
            .transpose()?,
    );
    set(&mut o, "exs_k", args.exs_k);
    let params: PointwiseParams = resolve(args.params.as_deref(), o)?;

    let index = load_index(&args.index)?;
    let topics = load_topic_map(&args.topics)?;
    let query = topic_query(&topics, &args.qid, &index)?;
    let model = build_model(&args.model, &index)?;
    let terms = if method == "lirme" {
        lirme_explain(&index, &model, &query, &args.docid, &params)?
    } else {
        let base: RankedList = match &args.run {
            Some(path) => load_run(path)?.get(&args.qid)?.clone(),
            None => model_list(&index, &model, &query, args.model.depth.max(params.exs_k))?,
        };
        exs_explain(&index, &model, &query, &args.docid, &params, &base)?
    };
    let text = match format {
        RenderFormat::Text => visualize_terms(&terms, RenderFormat::Text),
        RenderFormat::Json => {
            let record = PointwiseRecord {
                qid: args.qid,
                docid: args.docid,
                method,
                params,
                terms,
            };
            serde_json::to_string(&record).expect("serializable") + "\n"
        }
    };
    emit(args.out.as_deref(), &text)
}

pub fn pairwise(args: PairwiseArgs) -> CliResult<()> {
    let axioms: Vec<Axiom> = if args.axioms.is_empty() {
        Axiom::ALL.to_vec()
    } else {
        args.axioms
            .iter()
            .map(|a| parse_name(a))
            .collect::<CliResult<_>>()?
    };
    let mode = args
        .aggregate
        .as_deref()
        .map(parse_name::<AggregationMode>)
        .transpose()?;
    let format = render_format(args.format.as_deref().unwrap_or(if args.details {
        "text"
    } else {
        "json"
    }))?;

    let index = load_index(&args.index)?;
    let topics = load_topic_map(&args.topics)?;
    let query = topic_query(&topics, &args.qid, &index)?;
    let (d1, d2) = (args.d1.as_str(), args.d2.as_str());

    let mut prefs = Vec::new();
    for a in &axioms {
        prefs.push((a.to_string(), a.preference(&index, &query, d1, d2)?));
    }
    let aggregate = match mode {
        Some(m) => Some(AggregatedAxiom::of(&axioms, m)?.preference(&index, &query, d1, d2)?),
        None => None,
    };
    let details = if args.details {
        axioms
            .iter()
            .filter(|a| a.has_details())
            .map(|&a| explain_details(a, &index, &query, d1, d2))
            .collect::<rankex::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let text = match format {
        RenderFormat::Json => {
            let mut v = json!({
                "qid": args.qid,
                "d1": d1,
                "d2": d2,
                "preferences": prefs.iter().map(|(a, p)| json!({ "axiom": a, "preference": p })).collect::<Vec<_>>(),
            });
            if let (Some(m), Some(p)) = (&args.aggregate, aggregate) {
                v["aggregate"] = json!({ "mode": m, "preference": p });
            }
            if args.details {
                v["details"] = json!(details);
            }
            v.to_string() + "\n"
        }
        RenderFormat::Text => {
            let w = prefs
                .iter()
                .map(|(a, _)| a.len())
                .max()
                .unwrap_or(0)
                .max("aggregate".len());
            let mut out = format!("qid {}: {} vs {}\n", args.qid, d1, d2);
            for (a, p) in &prefs {
                out.push_str(&format!("{a:<w$}  {p:>2}\n"));
            }
            if let Some(p) = aggregate {
                out.push_str(&format!("{:<w$}  {p:>2}\n", "aggregate"));
            }
            for t in &details {
                out.push('\n');
                out.push_str(&t.render_text());
            }
            out
        }
    };
    emit(args.out.as_deref(), &text)
}

pub fn listwise(args: ListwiseArgs) -> CliResult<()> {
    let method: ListwiseMethod = parse_name(&args.method)?;
    let mut o = Vec::new();
    set(&mut o, "seed", args.seed);
    set(&mut o, "top_k", args.top_k);
    set(&mut o, "n_candidates", args.n_candidates);
    set(&mut o, "n_pairs", args.n_pairs);
    set(
        &mut o,
        "pair_strategy",
        args.pair_strategy
            .as_deref()
            .map(parse_name::<PairStrategy>)
            .transpose()?,
    );
    set(&mut o, "m_min", args.m_min);
    set(&mut o, "m_max", args.m_max);
    set(&mut o, "p", args.p);
    set(&mut o, "eval_budget", args.eval_budget);
    set(
        &mut o,
        "simple_ranker",
        args.simple_ranker
            .as_deref()
            .map(parse_name::<SimpleRankerKind>)
            .transpose()?,
    );
    if !args.simple_rankers.is_empty() {
        let kinds = args
            .simple_rankers
            .iter()
            .map(|s| parse_name::<SimpleRankerKind>(s))
            .collect::<CliResult<Vec<_>>>()?;
        set(&mut o, "simple_rankers", Some(kinds));
    }
    let params: ListwiseParams = resolve(args.params.as_deref(), o)?;

    let index = load_index(&args.index)?;
    let topics = load_topic_map(&args.topics)?;
    let qids: Vec<String> = match (&args.qid, args.all) {
        (Some(q), _) => vec![q.clone()],
        (None, true) => topics.keys().cloned().collect(),
        (None, false) => return Err(CliError::usage("give --qid or --all")),
    };
    let queries = qids
        .iter()
        .map(|q| topic_query(&topics, q, &index))
        .collect::<CliResult<Vec<_>>>()?;

    let runs = match &args.run {
        Some(path) => load_run(path)?.lists,
        None => {
            let model: Arc<_> = build_model(&args.model, &index)?;
            let mut lists = std::collections::BTreeMap::new();
            for q in &queries {
                lists.insert(
                    q.qid.clone(),
                    model_list(&index, &model, q, args.model.depth)?,
                );
            }
            lists
        }
    };

    let mut out = String::new();
    if args.all {
        for (qid, result) in explain_all(method, &index, &queries, &runs, &params) {
            let line = match result {
                Ok(e) => serde_json::to_string(&e).expect("serializable"),
                Err(msg) => {
                    eprintln!("qid {qid}: {msg}");
                    json!({ "qid": qid, "method": method.to_string(), "error": msg }).to_string()
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
    } else {
        let q = &queries[0];
        let list = runs
            .get(&q.qid)
            .ok_or_else(|| rankex::Error::UnknownQid(q.qid.clone()))?;
        let e = explain_query(method, &index, q, list, &params)?;
        out.push_str(&serde_json::to_string(&e).expect("serializable"));
        out.push('\n');
    }
    emit(args.out.as_deref(), &out)
}
