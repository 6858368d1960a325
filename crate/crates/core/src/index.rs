//! Immutable positional inverted index.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{tokenize, AnalyzerConfig};
use crate::{Error, Result};

const FORMAT_NAME: &str = "rankex-index";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub docid: String,
    pub text: String,
}

impl Document {
    pub fn new(docid: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            docid: docid.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub docid: String,
    /// Analyzed terms; position `i` is the i-th surviving token.
    pub tokens: Vec<String>,
}

impl TokenizedDocument {
    pub fn bag(&self) -> TermBag {
        TermBag::from_tokens(&self.tokens)
    }
}

/// Bag-of-words view of a document: what every scoring function consumes.
///
/// Built either from an indexed document or from a transient token list
/// (a perturbed document) so rankers never need to re-index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermBag {
    tf: BTreeMap<String, u32>,
    len: u32,
}

impl TermBag {
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut tf = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_ref().to_string()).or_insert(0) += 1;
        }
        TermBag {
            tf,
            len: tokens.len() as u32,
        }
    }

    pub fn tf(&self, term: &str) -> u32 {
        self.tf.get(term).copied().unwrap_or(0)
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Distinct terms with their frequencies, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.tf.iter().map(|(t, &n)| (t.as_str(), n))
    }

    pub fn distinct_terms(&self) -> usize {
        self.tf.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    /// Ordinal of the document in corpus order.
    pub doc: u32,
    pub positions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct TermEntry {
    cf: u64,
    postings: Vec<Posting>,
}

#[derive(Debug, Clone, PartialEq)]
struct IndexedDoc {
    doc: TokenizedDocument,
    bag: TermBag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionalIndex {
    config: AnalyzerConfig,
    docs: Vec<IndexedDoc>,
    lookup: HashMap<String, u32>,
    terms: BTreeMap<String, TermEntry>,
    collection_len: u64,
}

#[derive(Serialize, Deserialize)]
struct SerializedIndex {
    format: String,
    version: u32,
    config: AnalyzerConfig,
    docs: Vec<TokenizedDocument>,
}

impl PositionalIndex {
    /// Analyzes and indexes `corpus`. Rejects duplicate docids.
    pub fn build(corpus: &[Document], config: &AnalyzerConfig) -> Result<Self> {
        let docs = corpus
            .iter()
            .map(|d| TokenizedDocument {
                docid: d.docid.clone(),
                tokens: tokenize(&d.text, config),
            })
            .collect();
        Self::from_tokenized(docs, config.clone())
    }

    pub fn from_tokenized(docs: Vec<TokenizedDocument>, config: AnalyzerConfig) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(docs.len());
        let mut terms: BTreeMap<String, TermEntry> = BTreeMap::new();
        let mut collection_len = 0u64;
        let mut indexed = Vec::with_capacity(docs.len());

        for (ordinal, doc) in docs.into_iter().enumerate() {
            if doc.docid.is_empty() {
                return Err(Error::contract("empty docid"));
            }
            if lookup.insert(doc.docid.clone(), ordinal as u32).is_some() {
                return Err(Error::DuplicateDocid(doc.docid));
            }
            let mut local: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
            for (pos, tok) in doc.tokens.iter().enumerate() {
                local.entry(tok.as_str()).or_default().push(pos as u32);
            }
            for (term, positions) in local {
                let entry = terms.entry(term.to_string()).or_default();
                entry.cf += positions.len() as u64;
                entry.postings.push(Posting {
                    doc: ordinal as u32,
                    positions,
                });
            }
            collection_len += doc.tokens.len() as u64;
            let bag = doc.bag();
            indexed.push(IndexedDoc { doc, bag });
        }

        Ok(PositionalIndex {
            config,
            docs: indexed,
            lookup,
            terms,
            collection_len,
        })
    }

    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.config)
    }

    /// Number of documents.
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    /// Total number of tokens in the collection, |C|.
    pub fn collection_len(&self) -> u64 {
        self.collection_len
    }

    /// Mean document length; 0 for an empty corpus.
    pub fn avgdl(&self) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.collection_len as f64 / self.docs.len() as f64
        }
    }

    pub fn df(&self, term: &str) -> u32 {
        self.terms.get(term).map_or(0, |e| e.postings.len() as u32)
    }

    pub fn cf(&self, term: &str) -> u64 {
        self.terms.get(term).map_or(0, |e| e.cf)
    }

    /// Robertson-Sparck Jones idf in its non-negative form,
    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Plain `ln(N / df)`; zero for terms in every document and for unseen terms.
    pub fn log_idf(&self, term: &str) -> f64 {
        let df = self.df(term);
        if df == 0 {
            0.0
        } else {
            (self.docs.len() as f64 / df as f64).ln()
        }
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.terms.get(term).map_or(&[], |e| e.postings.as_slice())
    }

    /// Terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn contains(&self, docid: &str) -> bool {
        self.lookup.contains_key(docid)
    }

    fn ordinal(&self, docid: &str) -> Result<u32> {
        self.lookup
            .get(docid)
            .copied()
            .ok_or_else(|| Error::UnknownDocid(docid.to_string()))
    }

    pub fn docid(&self, ordinal: u32) -> &str {
        &self.docs[ordinal as usize].doc.docid
    }

    /// Docids in corpus order.
    pub fn docids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.doc.docid.as_str())
    }

    pub fn document(&self, docid: &str) -> Result<&TokenizedDocument> {
        Ok(&self.docs[self.ordinal(docid)? as usize].doc)
    }

    pub fn bag(&self, docid: &str) -> Result<&TermBag> {
        Ok(&self.docs[self.ordinal(docid)? as usize].bag)
    }

    pub fn doc_length(&self, docid: &str) -> Result<u32> {
        Ok(self.bag(docid)?.len())
    }

    pub fn tf(&self, term: &str, docid: &str) -> Result<u32> {
        Ok(self.bag(docid)?.tf(term))
    }

    /// Positions of `term` in `docid`, strictly increasing; empty if absent.
    pub fn positions(&self, term: &str, docid: &str) -> Result<Vec<u32>> {
        let ordinal = self.ordinal(docid)?;
        let postings = self.postings(term);
        Ok(postings
            .binary_search_by_key(&ordinal, |p| p.doc)
            .map(|i| postings[i].positions.clone())
            .unwrap_or_default())
    }

    /// Serialized form: a versioned JSON document holding the analyzer
    /// configuration and the analyzed token streams.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let ser = SerializedIndex {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            config: self.config.clone(),
            docs: self.docs.iter().map(|d| d.doc.clone()).collect(),
        };
        let mut out = serde_json::to_vec(&ser)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let ser: SerializedIndex = serde_json::from_slice(bytes)?;
        if ser.format != FORMAT_NAME || ser.version != FORMAT_VERSION {
            return Err(Error::contract(format!(
                "unsupported index format {} v{}",
                ser.format, ser.version
            )));
        }
        Self::from_tokenized(ser.docs, ser.config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Deserialize)]
struct CorpusLine {
    docid: String,
    text: String,
}

/// Reads a JSON-Lines corpus (`{"docid": ..., "text": ...}` per line).
/// Blank lines are skipped; an input without documents is an error.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(Document::new(parsed.docid, parsed.text));
    }
    if docs.is_empty() {
        return Err(Error::contract("corpus contains no documents"));
    }
    Ok(docs)
}

pub fn read_corpus_file(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}
