//! Annotated dialog transcripts: parsing, normalization, repair annotations,
//! gold tag derivation, validation and cross-validation folds.

mod align;
mod annotation;
mod folds;
mod format;
mod gold;
pub mod licensing;
mod normalize;
mod validate;

pub use align::{align, alignment_score, derive_correspondences, Aligned};
pub use annotation::{
    repair_annotations, CorrKind, Correspondence, RepairAnnotation, RepairKind,
};
pub use folds::{partition_folds, split_growing_heldout, Fold};
pub use format::{parse_corpus, serialize_corpus};
pub use gold::{derive_gold_tags, GoldRepair, GoldTag, GoldTurn, GoldWarning};
pub use normalize::{normalize_corpus, normalize_tokens};
pub use validate::{validate, Violation, ViolationKind};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// An annotation label attached to a token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Interruption point of repair `index`, placed on the last reparandum word.
    Ip { index: u32, kind: Option<RepairKind> },
    /// Explicit reparandum onset of a fresh start (`sr10<`).
    Onset(u32),
    /// Word match correspondence (`m11`).
    Match(u32),
    /// Word replacement correspondence (`r12`).
    Replace(u32),
    /// Inserted or deleted word of repair `index` (`x10`).
    Delete(u32),
    /// Multi-word correspondence (`p13`).
    Multi(u32),
    /// Editing-term word.
    Et,
    /// Intonational boundary tone after the word.
    Tone,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx = |i: u32| if i == 0 { String::new() } else { i.to_string() };
        match self {
            Label::Ip { index, kind } => {
                write!(f, "ip{}", idx(*index))?;
                if let Some(k) = kind {
                    write!(f, ":{k}")?;
                }
                Ok(())
            }
            Label::Onset(i) => write!(f, "sr{}<", idx(*i)),
            Label::Match(i) => write!(f, "m{i}"),
            Label::Replace(i) => write!(f, "r{i}"),
            Label::Delete(i) => write!(f, "x{}", idx(*i)),
            Label::Multi(i) => write!(f, "p{i}"),
            Label::Et => f.write_str("et"),
            Label::Tone => f.write_str("tone"),
        }
    }
}

impl Label {
    /// Correspondence co-index carried by an `m`, `r` or `p` label.
    pub fn co_index(&self) -> Option<u32> {
        match self {
            Label::Match(i) | Label::Replace(i) | Label::Multi(i) => Some(*i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// POS label; contraction components are joined by `^`.
    pub pos: String,
    /// Labels in canonical (sorted) order.
    pub labels: Vec<Label>,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>) -> Self {
        Token { surface: surface.into(), pos: pos.into(), labels: Vec::new() }
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Self {
        self.labels = labels;
        sort_labels(&mut self.labels);
        self
    }

    pub fn is_fragment(&self) -> bool {
        self.surface.ends_with('-') || self.pos == crate::tags::FRAGMENT
    }

    pub fn has_tone(&self) -> bool {
        self.labels.contains(&Label::Tone)
    }

    pub fn is_et(&self) -> bool {
        self.labels.contains(&Label::Et)
    }
}

pub(crate) fn sort_labels(labels: &mut Vec<Label>) {
    labels.sort_by_key(|l| l.to_string());
    labels.dedup();
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub id: String,
    pub tokens: Vec<Token>,
    /// Silence after each token in seconds; same length as `tokens`.
    pub silences: Vec<Option<f64>>,
}

impl Turn {
    pub fn new(speaker: impl Into<String>, id: impl Into<String>) -> Self {
        Turn { speaker: speaker.into(), id: id.into(), tokens: Vec::new(), silences: Vec::new() }
    }

    pub fn push(&mut self, token: Token, silence: Option<f64>) {
        self.tokens.push(token);
        self.silences.push(silence);
    }

    /// Whether the last real word carries a boundary tone.
    pub fn turn_final_tone(&self) -> bool {
        self.tokens
            .iter()
            .rev()
            .find(|t| t.pos != crate::tags::TURN)
            .is_some_and(Token::has_tone)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialog {
    pub id: String,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub dialogs: Vec<Dialog>,
}

impl Corpus {
    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.dialogs.iter().flat_map(|d| d.turns.iter())
    }

    pub fn turn_count(&self) -> usize {
        self.dialogs.iter().map(|d| d.turns.len()).sum()
    }

    /// Corpus made of the dialogs at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus { dialogs: indices.iter().map(|&i| self.dialogs[i].clone()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownPos(String),
    DanglingIndex(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnknownPos(p) => write!(f, "unknown POS label `{p}`"),
            ParseErrorKind::DanglingIndex(l) => write!(f, "label `{l}` refers to no repair"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("token `{surface}`: {parts} POS labels for {split} contraction parts")]
    ContractionMismatch { surface: String, parts: usize, split: usize },
    #[error("turn {turn}: {message}")]
    Annotation { turn: String, message: String },
    #[error("cannot make {k} folds from {dialogs} dialogs")]
    TooManyFolds { k: usize, dialogs: usize },
}
