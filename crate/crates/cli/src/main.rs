//! `rankex`: index a corpus, rank topics, explain rankings, compare runs.

mod explain;
mod params;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rankex::analysis::AnalyzerConfig;
use rankex::evaluation::{jaccard_at_k, kendall_tau, rbo, spearman_rho};
use rankex::index::{read_corpus_file, PositionalIndex};
use rankex::rankers::{
    rank, HiddenIntentRanker, Query, RankedList, Ranker, RankerParams, SimpleRankerKind,
    WeightedTerm,
};
use rankex::trec::{format_run, load_from_res, load_topics, Run, Topic};
use rankex::Error;
use serde_json::json;

const DEMO_CORPUS: &str = include_str!("../data/demo_corpus.jsonl");
const DEMO_TOPICS: &str = include_str!("../data/demo_topics.tsv");

#[derive(Parser)]
#[command(
    name = "rankex",
    version,
    about = "Post-hoc explanations for ranking models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a positional index from a JSON-Lines corpus.
    Index(IndexArgs),
    /// Rank every topic with a model and write a TREC run.
    Rank(RankArgs),
    /// Explain a ranking.
    #[command(subcommand)]
    Explain(ExplainCommand),
    /// Compare two runs query by query.
    Eval(EvalArgs),
    /// Write the bundled demo corpus and topics.
    Demo(DemoArgs),
}

#[derive(Subcommand)]
pub enum ExplainCommand {
    /// Term weights for one document's score (LIRME or EXS).
    Pointwise(explain::PointwiseArgs),
    /// Axiom preferences for a document pair.
    Pairwise(explain::PairwiseArgs),
    /// Expansion terms that let a simple ranker reproduce a ranked list.
    Listwise(explain::ListwiseArgs),
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Disable Snowball stemming.
    #[arg(long)]
    no_stem: bool,
    /// Keep stopwords.
    #[arg(long)]
    keep_stopwords: bool,
}

/// The black box being explained: a simple model, optionally scoring
/// hidden expansion terms on top of the query.
#[derive(Args, Clone)]
pub struct ModelArgs {
    /// bm25, lmjm or lmdir.
    #[arg(long, default_value = "bm25")]
    pub model: String,
    /// Comma-separated hidden terms added to every query by the model.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<String>,
    /// Ranking depth when the model produces the list.
    #[arg(long, default_value_t = 100)]
    pub depth: usize,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Only this topic.
    #[arg(long)]
    qid: Option<String>,
    #[arg(long, default_value = "rankex")]
    tag: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// rbo, tau, rho or jaccard.
    #[arg(long, default_value = "rbo")]
    measure: String,
    /// RBO persistence.
    #[arg(long, default_value_t = 0.9)]
    p: f64,
    /// Jaccard cutoff.
    #[arg(long, default_value_t = 10)]
    k: usize,
    run_a: PathBuf,
    run_b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// Directory receiving demo_corpus.jsonl and demo_topics.tsv.
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its process exit code: 1 I/O and data errors, 2 usage,
/// 3 missing document or query.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn at(path: &Path, e: Error) -> Self {
        let mut c = CliError::from(e);
        c.message = format!("{}: {}", path.display(), c.message);
        c
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownDocid(_) | Error::UnknownQid(_) => 3,
            Error::UnknownName { .. } | Error::InvalidParameter(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn load_index(path: &Path) -> CliResult<PositionalIndex> {
    PositionalIndex::load(path).map_err(|e| CliError::at(path, e))
}

pub fn load_topic_map(path: &Path) -> CliResult<BTreeMap<String, Topic>> {
    let topics = load_topics(path).map_err(|e| CliError::at(path, e))?;
    Ok(topics.into_iter().map(|t| (t.qid.clone(), t)).collect())
}

pub fn load_run(path: &Path) -> CliResult<Run> {
    load_from_res(path).map_err(|e| CliError::at(path, e))
}

pub fn topic_query(
    topics: &BTreeMap<String, Topic>,
    qid: &str,
    index: &PositionalIndex,
) -> CliResult<Query> {
    let t = topics
        .get(qid)
        .ok_or_else(|| Error::UnknownQid(qid.to_string()))?;
    Ok(Query::new(&t.qid, &t.text, index))
}

pub fn parse_name<T: std::str::FromStr<Err = Error>>(s: &str) -> CliResult<T> {
    Ok(s.parse::<T>()?)
}

pub fn build_model(args: &ModelArgs, index: &PositionalIndex) -> CliResult<Arc<dyn Ranker>> {
    let kind: SimpleRankerKind = parse_name(&args.model)?;
    let base = kind.build(&RankerParams::default())?;
    if args.hidden.is_empty() {
        return Ok(base);
    }
    let hidden: Vec<WeightedTerm> = args
        .hidden
        .iter()
        .flat_map(|h| index.analyze(h))
        .map(WeightedTerm::unit)
        .collect();
    if hidden.is_empty() {
        return Err(CliError::usage("hidden terms analyze to nothing"));
    }
    Ok(Arc::new(HiddenIntentRanker::new(base, hidden)?))
}

/// The model's ranking of the documents matching the query.
pub fn model_list(
    index: &PositionalIndex,
    model: &dyn Ranker,
    query: &Query,
    depth: usize,
) -> CliResult<RankedList> {
    Ok(rank(
        index,
        model,
        &query.qid,
        &query.weighted(),
        None,
        depth,
    )?)
}

pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn cmd_index(args: IndexArgs) -> CliResult<()> {
    let corpus = read_corpus_file(&args.corpus).map_err(|e| CliError::at(&args.corpus, e))?;
    let mut config = AnalyzerConfig {
        stem: !args.no_stem,
        ..AnalyzerConfig::default()
    };
    if args.keep_stopwords {
        config.stopwords.clear();
    }
    let index = PositionalIndex::build(&corpus, &config)?;
    index
        .save(&args.out)
        .map_err(|e| CliError::at(&args.out, e))?;
    println!(
        "{} docs, {} terms",
        index.num_docs(),
        index.vocabulary_size()
    );
    Ok(())
}

fn cmd_rank(args: RankArgs) -> CliResult<()> {
    let index = load_index(&args.index)?;
    let topics = load_topic_map(&args.topics)?;
    let model = build_model(&args.model, &index)?;
    if args.model.depth == 0 {
        return Err(CliError::usage("--depth must be >= 1"));
    }
    let qids: Vec<String> = match &args.qid {
        Some(q) => vec![q.clone()],
        None => topics.keys().cloned().collect(),
    };
    let mut run = Run::new(&args.tag);
    for qid in qids {
        let query = topic_query(&topics, &qid, &index)?;
        let list = model_list(&index, &model, &query, args.model.depth)?;
        if list.is_empty() {
            eprintln!("qid {qid}: no document matches the query");
            continue;
        }
        run.insert(list);
    }
    emit(args.out.as_deref(), &format_run(&run))
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    const MEASURES: [&str; 4] = ["rbo", "tau", "rho", "jaccard"];
    let measure = args.measure.to_ascii_lowercase();
    if !MEASURES.contains(&measure.as_str()) {
        return Err(CliError::usage(format!(
            "unknown measure `{}`; valid: {}",
            args.measure,
            MEASURES.join(", ")
        )));
    }
    let params = match measure.as_str() {
        "rbo" => json!({ "p": args.p }),
        "jaccard" => json!({ "k": args.k }),
        _ => json!({}),
    };
    let a = load_run(&args.run_a)?;
    let b = load_run(&args.run_b)?;
    let shared: Vec<&String> = a
        .lists
        .keys()
        .filter(|q| b.lists.contains_key(*q))
        .collect();
    if shared.is_empty() {
        return Err(CliError {
            code: 3,
            message: "the runs share no qid".into(),
        });
    }
    let mut out = String::new();
    let mut values = Vec::new();
    for qid in shared {
        let (la, lb) = (a.lists[qid].docids(), b.lists[qid].docids());
        let value = match measure.as_str() {
            "rbo" => rbo(&la, &lb, args.p),
            "tau" => kendall_tau(&la, &lb),
            "rho" => spearman_rho(&la, &lb),
            _ => jaccard_at_k(&la, &lb, args.k),
        };
        let value = match value {
            Ok(v) => {
                values.push(v);
                json!(v)
            }
            Err(Error::Contract(msg)) => {
                eprintln!("qid {qid}: {msg}");
                serde_json::Value::Null
            }
            Err(e) => return Err(e.into()),
        };
        out.push_str(
            &json!({ "qid": qid, "measure": measure, "value": value, "params": params })
                .to_string(),
        );
        out.push('\n');
    }
    let mean = if values.is_empty() {
        serde_json::Value::Null
    } else {
        json!(values.iter().sum::<f64>() / values.len() as f64)
    };
    out.push_str(
        &json!({ "qid": "all", "measure": measure, "value": mean, "params": params }).to_string(),
    );
    out.push('\n');
    emit(args.out.as_deref(), &out)
}

fn cmd_demo(args: DemoArgs) -> CliResult<()> {
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    for (name, text) in [
        ("demo_corpus.jsonl", DEMO_CORPUS),
        ("demo_topics.tsv", DEMO_TOPICS),
    ] {
        let path = args.out.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    println!(
        "wrote demo_corpus.jsonl and demo_topics.tsv to {}",
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Explain(ExplainCommand::Pointwise(a)) => explain::pointwise(a),
        Command::Explain(ExplainCommand::Pairwise(a)) => explain::pairwise(a),
        Command::Explain(ExplainCommand::Listwise(a)) => explain::listwise(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Demo(a) => cmd_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
