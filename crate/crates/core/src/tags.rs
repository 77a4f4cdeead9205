//! Tag vocabularies shared across the crate.

use serde::{Deserialize, Serialize};
use std::fmt;

/// The Trains part-of-speech tagset.
pub const POS_TAGS: &[&str] = &[
    "AC", "BE", "BED", "BEG", "BEN", "BEP", "BEZ", "CC", "CC_D", "CD", "DO", "DOD", "DOP", "DOZ",
    "DP", "DT", "EX", "HAVE", "HAVED", "HAVEP", "HAVEZ", "JJ", "JJR", "JJS", "MD", "NN", "NNS",
    "NNP", "NNPS", "PDT", "POS", "PPREP", "PREP", "PRP", "PRP$", "RB", "RBR", "RBS", "RB_D", "RP",
    "SC", "TO", "TURN", "UH_D", "UH_FP", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WRB", "WP$",
];

/// Pseudo tag for the normalized word-fragment token.
pub const FRAGMENT: &str = "FRAGMENT";
/// Tag of the end-of-turn token.
pub const TURN: &str = "TURN";
/// Surface form of the end-of-turn token.
pub const TURN_WORD: &str = "<turn>";
/// Surface form of the normalized word-fragment token.
pub const FRAGMENT_WORD: &str = "<fragment>";
/// Filled-pause tag.
pub const FILLED_PAUSE: &str = "UH_FP";

/// Discourse-marker tags.
pub const DM_TAGS: &[&str] = &["AC", "UH_D", "CC_D", "RB_D"];

/// Leaves that replace `TURN` in the extended POS classification tree.
pub const UTTERANCE_TAGS: &[&str] = &["TURN", "TONE", "PUSH", "POP", "MOD", "CAN", "ABR"];

/// True when `tag` is a member of the fixed tagset or a pseudo tag.
pub fn is_known_pos(tag: &str) -> bool {
    tag == FRAGMENT || POS_TAGS.contains(&tag)
}

pub fn is_dm(tag: &str) -> bool {
    DM_TAGS.contains(&tag)
}

/// Tag after collapsing discourse-marker distinctions.
pub fn collapse_dm(tag: &str) -> &str {
    match tag {
        "CC_D" => "CC",
        "RB_D" => "RB",
        "AC" | "UH_D" => "UH_FP",
        t => t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum ToneTag {
    #[default]
    Null,
    Tone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum EditTag {
    #[default]
    Null,
    Push,
    Et,
    Pop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum RepairTag {
    #[default]
    Null,
    Mod,
    Can,
    Abr,
}

/// Correspondence type between an alteration word and its licensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corr {
    M,
    R,
    X,
}

impl ToneTag {
    pub const ALL: [ToneTag; 2] = [ToneTag::Null, ToneTag::Tone];
    pub fn index(self) -> usize {
        self as usize
    }
}

impl EditTag {
    pub const ALL: [EditTag; 4] = [EditTag::Null, EditTag::Push, EditTag::Et, EditTag::Pop];
    pub fn index(self) -> usize {
        self as usize
    }
}

impl RepairTag {
    pub const ALL: [RepairTag; 4] = [RepairTag::Null, RepairTag::Mod, RepairTag::Can, RepairTag::Abr];
    pub fn index(self) -> usize {
        self as usize
    }
    pub fn has_onset(self) -> bool {
        matches!(self, RepairTag::Mod | RepairTag::Can)
    }
}

impl Corr {
    pub const ALL: [Corr; 3] = [Corr::M, Corr::R, Corr::X];
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ToneTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToneTag::Null => "null",
            ToneTag::Tone => "Tone",
        })
    }
}

impl fmt::Display for EditTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EditTag::Null => "null",
            EditTag::Push => "Push",
            EditTag::Et => "ET",
            EditTag::Pop => "Pop",
        })
    }
}

impl fmt::Display for RepairTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairTag::Null => "null",
            RepairTag::Mod => "Mod",
            RepairTag::Can => "Can",
            RepairTag::Abr => "Abr",
        })
    }
}

impl fmt::Display for Corr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corr::M => "m",
            Corr::R => "r",
            Corr::X => "x",
        })
    }
}
