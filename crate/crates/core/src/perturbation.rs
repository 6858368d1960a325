//! Document perturbation samplers for the pointwise explainers.
//!
//! Every sampler removes tokens from a tokenized document and reports each
//! variant together with its interpretable representation: one presence bit
//! per distinct term of the original document, in lexicographic term order.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::index::{PositionalIndex, TokenizedDocument};
use crate::rng::XorShift64Star;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Random,
    Masking,
    Tfidf,
}

impl SamplerKind {
    const NAMES: [&'static str; 3] = ["random", "masking", "tfidf"];

    pub fn as_str(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "masking" => Ok(Self::Masking),
            "tfidf" => Ok(Self::Tfidf),
            _ => Err(Error::unknown_name("sampler", s, &Self::NAMES)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Expected fraction of tokens removed.
    pub rate: f64,
    /// Window length for the masking sampler.
    pub chunk: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kind: SamplerKind::Random,
            rate: 0.3,
            chunk: 3,
            n_samples: 200,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::param(format!(
                "rate must lie in [0,1], got {}",
                self.rate
            )));
        }
        if self.chunk == 0 {
            return Err(Error::param("chunk must be >= 1"));
        }
        if self.n_samples == 0 {
            return Err(Error::param("n_samples must be >= 1"));
        }
        Ok(())
    }

    fn expect_kind(&self, kind: SamplerKind) -> Result<()> {
        self.validate()?;
        if self.kind != kind {
            return Err(Error::param(format!(
                "{} sampler called with kind {}",
                kind, self.kind
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedSample {
    pub kept_mask: Vec<bool>,
    pub surviving_tokens: Vec<String>,
    /// Presence bit per distinct term of the source document.
    pub feature_vector: Vec<bool>,
    /// Fraction of tokens removed.
    pub distance: f64,
}

impl PerturbedSample {
    pub fn from_mask(tokens: &[String], features: &[String], kept_mask: Vec<bool>) -> Self {
        debug_assert_eq!(tokens.len(), kept_mask.len());
        let surviving_tokens: Vec<String> = tokens
            .iter()
            .zip(&kept_mask)
            .filter(|(_, &k)| k)
            .map(|(t, _)| t.clone())
            .collect();
        let present: BTreeSet<&str> = surviving_tokens.iter().map(String::as_str).collect();
        let feature_vector = features
            .iter()
            .map(|f| present.contains(f.as_str()))
            .collect();
        let kept = surviving_tokens.len();
        let distance = if tokens.is_empty() {
            0.0
        } else {
            1.0 - kept as f64 / tokens.len() as f64
        };
        PerturbedSample {
            kept_mask,
            surviving_tokens,
            feature_vector,
            distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbations {
    /// Distinct terms of the source document, lexicographic; indexes
    /// `feature_vector`.
    pub features: Vec<String>,
    pub samples: Vec<PerturbedSample>,
    /// Set when the tf-idf sampler had no signal and removed uniformly.
    pub uniform_fallback: bool,
}

pub fn distinct_terms(doc: &TokenizedDocument) -> Vec<String> {
    doc.tokens
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect()
}

fn non_empty(doc: &TokenizedDocument) -> Result<()> {
    if doc.tokens.is_empty() {
        Err(Error::contract(format!(
            "nothing to perturb: document {} is empty",
            doc.docid
        )))
    } else {
        Ok(())
    }
}

/// Independent per-position removal with the given probabilities.
fn bernoulli_samples(
    doc: &TokenizedDocument,
    removal: &[f64],
    n_samples: usize,
    rng: &mut XorShift64Star,
) -> Vec<PerturbedSample> {
    let features = distinct_terms(doc);
    (0..n_samples)
        .map(|_| {
            let mask = removal.iter().map(|&p| rng.next_f64() >= p).collect();
            PerturbedSample::from_mask(&doc.tokens, &features, mask)
        })
        .collect()
}

/// Removes each token independently with probability `rate`.
pub fn random_sampler(
    doc: &TokenizedDocument,
    config: &SamplerConfig,
    rng: &mut XorShift64Star,
) -> Result<Perturbations> {
    config.expect_kind(SamplerKind::Random)?;
    non_empty(doc)?;
    let removal = vec![config.rate; doc.tokens.len()];
    Ok(Perturbations {
        features: distinct_terms(doc),
        samples: bernoulli_samples(doc, &removal, config.n_samples, rng),
        uniform_fallback: false,
    })
}

/// Probability with which each window start is chosen so that the expected
/// fraction of positions covered by the union of chosen windows equals `rate`.
pub fn masking_start_probability(len: usize, chunk: usize, rate: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    if rate >= 1.0 {
        return 1.0;
    }
    let starts = len - chunk + 1;
    // Number of window starts covering each position.
    let cover: Vec<i32> = (0..len)
        .map(|i| {
            let lo = (i + 1).saturating_sub(chunk);
            let hi = i.min(starts - 1);
            (hi - lo + 1) as i32
        })
        .collect();
    let expected =
        |q: f64| cover.iter().map(|&c| 1.0 - (1.0 - q).powi(c)).sum::<f64>() / len as f64;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Removes contiguous windows of `chunk` tokens. Each of the
/// `len - chunk + 1` window starts is chosen independently, with the
/// probability that makes the expected removed fraction equal `rate`;
/// overlapping windows remove the union of their positions.
pub fn masking_sampler(
    doc: &TokenizedDocument,
    config: &SamplerConfig,
    rng: &mut XorShift64Star,
) -> Result<Perturbations> {
    config.expect_kind(SamplerKind::Masking)?;
    non_empty(doc)?;
    let len = doc.tokens.len();
    if config.chunk > len {
        return Err(Error::param(format!(
            "chunk {} exceeds document length {len}",
            config.chunk
        )));
    }
    let q = masking_start_probability(len, config.chunk, config.rate);
    let features = distinct_terms(doc);
    let samples = (0..config.n_samples)
        .map(|_| {
            let mut mask = vec![true; len];
            for start in 0..=len - config.chunk {
                if rng.next_f64() < q {
                    mask[start..start + config.chunk].fill(false);
                }
            }
            PerturbedSample::from_mask(&doc.tokens, &features, mask)
        })
        .collect();
    Ok(Perturbations {
        features,
        samples,
        uniform_fallback: false,
    })
}

/// Per-position removal probabilities `min(1, rate·n·w(pos)/Σw)` with
/// `w(pos) = tf(t, D)·ln(N/df(t))` for the term at that position. Falls back
/// to `rate` everywhere when every weight is zero.
pub fn tfidf_removal_probabilities(
    doc: &TokenizedDocument,
    index: &PositionalIndex,
    rate: f64,
) -> (Vec<f64>, bool) {
    let bag = doc.bag();
    let weights: Vec<f64> = doc
        .tokens
        .iter()
        .map(|t| bag.tf(t) as f64 * index.log_idf(t))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return (vec![rate; doc.tokens.len()], true);
    }
    let n = doc.tokens.len() as f64;
    let probs = weights
        .iter()
        .map(|w| (rate * n * w / total).min(1.0))
        .collect();
    (probs, false)
}

/// Removes high tf-idf tokens preferentially.
pub fn tfidf_sampler(
    doc: &TokenizedDocument,
    index: &PositionalIndex,
    config: &SamplerConfig,
    rng: &mut XorShift64Star,
) -> Result<Perturbations> {
    config.expect_kind(SamplerKind::Tfidf)?;
    non_empty(doc)?;
    if let Some(t) = doc.tokens.iter().find(|t| index.df(t) == 0) {
        return Err(Error::contract(format!(
            "term `{t}` of {} is not in the index",
            doc.docid
        )));
    }
    let (removal, uniform_fallback) = tfidf_removal_probabilities(doc, index, config.rate);
    Ok(Perturbations {
        features: distinct_terms(doc),
        samples: bernoulli_samples(doc, &removal, config.n_samples, rng),
        uniform_fallback,
    })
}

/// Runs the sampler selected by `config.kind`, seeded from `config.seed`.
pub fn perturb(
    doc: &TokenizedDocument,
    index: &PositionalIndex,
    config: &SamplerConfig,
) -> Result<Perturbations> {
    let mut rng = XorShift64Star::new(config.seed);
    match config.kind {
        SamplerKind::Random => random_sampler(doc, config, &mut rng),
        SamplerKind::Masking => masking_sampler(doc, config, &mut rng),
        SamplerKind::Tfidf => tfidf_sampler(doc, index, config, &mut rng),
    }
}
