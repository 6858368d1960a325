//! Post-hoc explanations for ranking models.
//!
//! The crate bundles a small sparse retrieval stack (analyzer, positional
//! inverted index, BM25 and smoothed language models) with three families of
//! explainers built on top of it:
//!
//! * [`pointwise`]: local linear surrogates (LIRME, EXS) that attribute one
//!   document's score to its terms,
//! * [`axioms`]: retrieval axioms giving ternary preferences over document
//!   pairs,
//! * [`listwise`]: expanded queries that let a simple ranker approximate a
//!   whole ranked list.
//!
//! [`evaluation`] holds the rank-similarity and explanation-quality measures
//! used to judge all of them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod axioms;
pub mod error;
pub mod evaluation;
pub mod index;
pub mod listwise;
pub mod perturbation;
pub mod pointwise;
pub mod rankers;
pub mod rng;
pub mod synthetic;
pub mod trec;

pub use error::{Error, Result};
