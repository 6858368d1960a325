//! TREC run files and topic files.
//!
//! Run lines are `qid Q0 docid rank score tag`, whitespace separated. Topics
//! are `qid<TAB>query text`, one per line.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::rankers::{RankedEntry, RankedList};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub tag: String,
    pub lists: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Run {
            tag: tag.into(),
            lists: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, list: RankedList) {
        self.lists.insert(list.qid.clone(), list);
    }

    pub fn get(&self, qid: &str) -> Result<&RankedList> {
        self.lists
            .get(qid)
            .ok_or_else(|| Error::UnknownQid(qid.to_string()))
    }
}

/// Parses a run. Entries of each qid are ordered by their rank column, which
/// must then read `1..=n` without gaps. The tag of the first line is kept.
pub fn parse_run(text: &str) -> Result<Run> {
    let mut tag: Option<String> = None;
    let mut grouped: BTreeMap<String, Vec<RankedEntry>> = BTreeMap::new();
    let mut seen: HashMap<String, HashSet<String>> = HashMap::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        if cols.len() != 6 {
            return Err(err(format!("expected 6 columns, found {}", cols.len())));
        }
        let rank: u32 = cols[3]
            .parse()
            .map_err(|_| err(format!("bad rank `{}`", cols[3])))?;
        let score: f64 = cols[4]
            .parse()
            .map_err(|_| err(format!("bad score `{}`", cols[4])))?;
        if !score.is_finite() {
            return Err(err(format!("non-finite score `{}`", cols[4])));
        }
        let (qid, docid) = (cols[0].to_string(), cols[2].to_string());
        if !seen.entry(qid.clone()).or_default().insert(docid.clone()) {
            return Err(err(format!("duplicate docid {docid} for qid {qid}")));
        }
        first_line.entry(qid.clone()).or_insert(lineno);
        tag.get_or_insert_with(|| cols[5].to_string());
        grouped
            .entry(qid)
            .or_default()
            .push(RankedEntry { docid, rank, score });
    }

    let mut run = Run::new(tag.unwrap_or_default());
    for (qid, mut entries) in grouped {
        entries.sort_by_key(|e| e.rank);
        let list = RankedList::new(qid.clone(), entries).map_err(|e| Error::Parse {
            line: first_line[&qid],
            message: e.to_string(),
        })?;
        run.insert(list);
    }
    Ok(run)
}

/// Loads a run file into `qid → RankedList`.
pub fn load_from_res(path: impl AsRef<Path>) -> Result<Run> {
    parse_run(&std::fs::read_to_string(path)?)
}

/// Canonical text form: qids in lexicographic order, entries by rank, scores
/// in shortest round-trip decimal form.
pub fn format_run(run: &Run) -> String {
    let mut out = String::new();
    for list in run.lists.values() {
        for e in list.entries() {
            writeln!(
                out,
                "{} Q0 {} {} {} {}",
                list.qid, e.docid, e.rank, e.score, run.tag
            )
            .expect("writing to a String");
        }
    }
    out
}

pub fn save_to_res(run: &Run, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_run(run))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub qid: String,
    pub text: String,
}

pub fn parse_topics(text: &str) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (qid, query) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected `qid<TAB>query`".into(),
        })?;
        let qid = qid.trim();
        if qid.is_empty() || !seen.insert(qid.to_string()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("empty or duplicate qid `{qid}`"),
            });
        }
        topics.push(Topic {
            qid: qid.to_string(),
            text: query.trim().to_string(),
        });
    }
    Ok(topics)
}

pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    parse_topics(&std::fs::read_to_string(path)?)
}
