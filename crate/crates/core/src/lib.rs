//! Corpus-to-tags toolkit.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: stream and shard caption records, aggregate per-image tag sets.
//! - [`semparse`]: rule-based caption parsing into heads, modifiers and
//!   relations, and their projection onto entity/attribute/action tags.
//! - [`vocab`]: frequency counting, synonym folding and the ranked tag
//!   vocabulary, plus corpus statistics and overlap analysis.
//! - [`losskit`]: tagging, language-modelling and alignment losses with
//!   analytic gradients, and the hard-negative sampler.
//! - [`tagger`]: a linear multi-label tagger trained with the asymmetric loss.
//! - [`evalkit`]: AP/mAP, thresholded precision/recall/F1, threshold sweeps,
//!   caption-as-tagger evaluation and Recall@K.
//! - [`rerank`]: retrieval that blends embedding similarity with tag overlap.
//! - [`synth`]: seeded synthetic corpora used by demos and tests.

pub mod corpus;
pub mod evalkit;
pub mod losskit;
pub mod rerank;
pub mod rng;
pub mod semparse;
pub mod synth;
pub mod tagger;
pub mod vocab;

pub use corpus::{CaptionRecord, ImageTagSet, Shard};
pub use semparse::{ParseResult, ParsedTags};
pub use vocab::{TagId, TagType, TagVocabulary};
