//! Joint model of words, POS tags, boundary tones, editing terms and
//! speech repairs, and its incremental beam decoder.

mod decode;
pub mod features;
pub mod model;
pub mod state;

pub use decode::{decode_turn, expand, follow_gold_path, score_gold_path, Decoded, Expansion, Factors, Hypothesis};
pub use model::{TrainedModel, TrainingSamples};
pub use state::{legal_er, EtState, Item, LicensorView, OnsetView, State};

use crate::corpus::GoldTag;
use crate::silence::SilenceTable;
use crate::tags::{EditTag, RepairTag, ToneTag};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BEAM: usize = 40;
pub const DEFAULT_ORDER: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum LmError {
    #[error("correction requires repairs to be enabled")]
    CorrectionWithoutRepairs,
    #[error("silence requires tones or repairs to be enabled")]
    SilenceWithoutTags,
    #[error("beam width must be positive")]
    EmptyBeam,
    #[error("history order must be positive")]
    ZeroOrder,
    #[error("no hypothesis survives word {position} (`{word}`)")]
    DeadEnd { position: usize, word: String },
}

/// Which variables the model predicts, and decoder settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmConfig {
    pub tones: bool,
    /// Editing terms and repair detection.
    pub repairs: bool,
    /// Reparandum onsets and correspondences.
    pub correction: bool,
    pub silence: bool,
    /// Treat fresh starts as modification repairs.
    pub collapse_repairs: bool,
    pub beam: usize,
    pub order: usize,
    /// POS bits at history position j+1 need position j fully pinned.
    pub pos_constraint: bool,
    /// Train tone and editing-term trees on null sub-events.
    pub decompose_null: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig::pos_only()
    }
}

impl LmConfig {
    pub fn pos_only() -> Self {
        LmConfig {
            tones: false,
            repairs: false,
            correction: false,
            silence: false,
            collapse_repairs: false,
            beam: DEFAULT_BEAM,
            order: DEFAULT_ORDER,
            pos_constraint: true,
            decompose_null: true,
        }
    }

    pub fn full() -> Self {
        LmConfig { tones: true, repairs: true, correction: true, silence: true, ..LmConfig::pos_only() }
    }

    pub fn validate(&self) -> Result<(), LmError> {
        if self.correction && !self.repairs {
            return Err(LmError::CorrectionWithoutRepairs);
        }
        if self.silence && !self.tones && !self.repairs {
            return Err(LmError::SilenceWithoutTags);
        }
        if self.beam == 0 {
            return Err(LmError::EmptyBeam);
        }
        if self.order == 0 {
            return Err(LmError::ZeroOrder);
        }
        Ok(())
    }

    /// Gold tags restricted to the enabled variables.
    pub fn project(&self, tag: GoldTag) -> GoldTag {
        let mut out = GoldTag::default();
        if self.tones {
            out.t = tag.t;
        }
        if self.repairs {
            out.e = tag.e;
            out.r = if self.collapse_repairs && tag.r == RepairTag::Can { RepairTag::Mod } else { tag.r };
        }
        if self.correction {
            out.o = tag.o.filter(|_| out.r.has_onset());
            out.l = tag.l;
            out.c = tag.c;
        }
        out
    }
}

/// Conditional distributions the decoder draws on. Values need not be
/// normalized; the decoder normalizes each variable over its legal values.
pub trait ProbSource {
    /// POS tags the model can predict, in event order.
    fn pos_tags(&self) -> &[String];
    fn tone(&self, st: &State) -> [f64; 2];
    fn edit(&self, st: &State, t: ToneTag) -> [f64; 4];
    fn repair(&self, st: &State, t: ToneTag, e: EditTag) -> [f64; 4];
    /// Score of a candidate being the reparandum onset.
    fn onset(&self, st: &State, view: &OnsetView<'_>) -> f64;
    /// Score of a candidate licensing the current word.
    fn licensor(&self, st: &State, view: &LicensorView) -> f64;
    fn correspondence(&self, st: &State, view: &LicensorView) -> [f64; 3];
    /// Distribution over `pos_tags`, for the state after the utterance tags.
    fn pos(&self, st: &State) -> Vec<f64>;
    fn word(&self, st: &State, pos: usize, word: &str) -> f64;
    /// POS tags the word may take; `None` allows every tag.
    fn allowed_pos(&self, word: &str) -> Option<Vec<usize>>;
    fn silence(&self) -> Option<&SilenceTable>;
}

/// Scales `values` to sum to 1; `None` if they sum to zero.
pub(crate) fn normalize(values: &[f64]) -> Option<Vec<f64>> {
    let z: f64 = values.iter().sum();
    (z > 0.0 && z.is_finite()).then(|| values.iter().map(|v| v / z).collect())
}
