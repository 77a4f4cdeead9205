//! Statistical language modeling for spoken-dialog transcripts.
//!
//! The crate jointly models part-of-speech tags, discourse markers,
//! intonational boundary tones and speech repairs. It contains the corpus
//! format, word clustering, decision-tree estimation, baseline n-gram
//! models, the incremental beam decoder, silence preference factors and the
//! evaluation harness.

#![allow(clippy::needless_range_loop)]

pub mod clustering;
pub mod corpus;
pub mod dtree;
pub mod eval;
pub mod lm;
pub mod ngram;
pub mod pipeline;
pub mod silence;
pub mod synth;
pub mod tags;
