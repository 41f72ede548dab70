//! Constituent-ordering minimal pairs and the language-model preference
//! pipeline built around them.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`treebank`] reads bracketed constituency trees, finds the four shift
//!   configurations and realizes unshifted/shifted pairs from them.
//! * [`generator`] expands a template lexicon into graded synthetic pairs.
//! * [`weights`] measures constituents (words, syllables, tokens, modifiers)
//!   and forms relative-weight ratios.
//! * [`scoring`] computes sequence log probabilities against pluggable
//!   backends and turns them into pair preferences.
//! * [`analysis`] fits penalized-spline additive models with verb-wise random
//!   effects, runs predictor ablations, aggregates preference curves and
//!   computes rank correlations.
//! * [`study`] collects and aggregates human judgments.
//!
//! Stages exchange data as JSON Lines; see [`jsonl`].

pub mod analysis;
pub mod generator;
pub mod jsonl;
pub mod pair;
pub mod scoring;
pub mod study;
pub mod treebank;
pub mod weights;

pub use pair::{Constituent, PairSource, SentencePair, ShiftType, SyntheticMeta};
pub use weights::{RatioProfile, WeightProfile};
