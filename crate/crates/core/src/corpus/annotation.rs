use super::{CorpusError, Label, Turn};
use crate::tags::RepairTag;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepairKind {
    Mod,
    Can,
    Abr,
    ModAmbiguous,
    CanAmbiguous,
}

impl RepairKind {
    pub fn tag(self) -> RepairTag {
        match self {
            RepairKind::Mod | RepairKind::ModAmbiguous => RepairTag::Mod,
            RepairKind::Can | RepairKind::CanAmbiguous => RepairTag::Can,
            RepairKind::Abr => RepairTag::Abr,
        }
    }

    pub fn is_ambiguous(self) -> bool {
        matches!(self, RepairKind::ModAmbiguous | RepairKind::CanAmbiguous)
    }
}

impl fmt::Display for RepairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairKind::Mod => "mod",
            RepairKind::Can => "can",
            RepairKind::Abr => "abr",
            RepairKind::ModAmbiguous => "mod+",
            RepairKind::CanAmbiguous => "can+",
        })
    }
}

impl FromStr for RepairKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "mod" => RepairKind::Mod,
            "can" => RepairKind::Can,
            "abr" => RepairKind::Abr,
            "mod+" => RepairKind::ModAmbiguous,
            "can+" => RepairKind::CanAmbiguous,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorrKind {
    Match,
    Replace,
    Multi,
    Insert,
    Delete,
}

/// One word correspondence; insertions have no reparandum side and
/// deletions no alteration side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Correspondence {
    pub reparandum: Option<usize>,
    pub alteration: Option<usize>,
    pub kind: CorrKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairAnnotation {
    pub index: u32,
    pub kind: RepairKind,
    /// Token carrying the interruption point (last reparandum word).
    pub ip_position: usize,
    pub editing_term: Range<usize>,
    /// First reparandum token; `None` for an empty reparandum.
    pub reparandum_onset: Option<usize>,
    /// Whether the onset came from an explicit `sr<` label.
    pub explicit_onset: bool,
    pub correspondences: Vec<Correspondence>,
}

impl RepairAnnotation {
    /// First token after the editing term.
    pub fn alteration_onset(&self) -> usize {
        self.editing_term.end
    }

    /// Reparandum token range (may be empty).
    pub fn reparandum(&self) -> Range<usize> {
        match self.reparandum_onset {
            Some(o) => o..self.ip_position + 1,
            None => self.ip_position + 1..self.ip_position + 1,
        }
    }

    /// Matched and replaced pairs, ordered by reparandum position.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, CorrKind)> + '_ {
        self.correspondences.iter().filter_map(|c| match (c.reparandum, c.alteration) {
            (Some(r), Some(a)) => Some((r, a, c.kind)),
            _ => None,
        })
    }
}

fn annotation_error(turn: &Turn, message: String) -> CorpusError {
    CorpusError::Annotation { turn: turn.id.clone(), message }
}

/// Collects the repair annotations of a turn, ordered by interruption point.
pub fn repair_annotations(turn: &Turn) -> Result<Vec<RepairAnnotation>, CorpusError> {
    let mut repairs: Vec<RepairAnnotation> = Vec::new();
    for (pos, tok) in turn.tokens.iter().enumerate() {
        for label in &tok.labels {
            if let Label::Ip { index, kind } = label {
                if repairs.iter().any(|r| r.index == *index) {
                    return Err(annotation_error(turn, format!("repair index {index} used twice")));
                }
                let mut end = pos + 1;
                while end < turn.tokens.len() && turn.tokens[end].is_et() {
                    end += 1;
                }
                repairs.push(RepairAnnotation {
                    index: *index,
                    kind: kind.unwrap_or(RepairKind::Mod),
                    ip_position: pos,
                    editing_term: pos + 1..end,
                    reparandum_onset: None,
                    explicit_onset: false,
                    correspondences: Vec::new(),
                });
            }
        }
    }

    for rep in &mut repairs {
        let ip = rep.ip_position;
        let mut rep_side: Option<usize> = None;
        let mut note = |p: usize| rep_side = Some(rep_side.map_or(p, |q: usize| q.min(p)));
        for co in rep.index + 1..rep.index + 10 {
            let mut before = Vec::new();
            let mut after = Vec::new();
            let mut kind = None;
            for (pos, tok) in turn.tokens.iter().enumerate() {
                for label in &tok.labels {
                    if label.co_index() == Some(co) {
                        kind = Some(match label {
                            Label::Match(_) => CorrKind::Match,
                            Label::Replace(_) => CorrKind::Replace,
                            _ => CorrKind::Multi,
                        });
                        if pos <= ip {
                            before.push(pos);
                        } else {
                            after.push(pos);
                        }
                    }
                }
            }
            let Some(kind) = kind else { continue };
            let ok = match kind {
                CorrKind::Multi => !before.is_empty() && !after.is_empty(),
                _ => before.len() == 1 && after.len() == 1,
            };
            if !ok {
                return Err(annotation_error(
                    turn,
                    format!("correspondence {co} needs one word on each side of ip{}", rep.index),
                ));
            }
            note(before[0]);
            rep.correspondences.push(Correspondence {
                reparandum: Some(before[0]),
                alteration: Some(after[0]),
                kind,
            });
        }
        for (pos, tok) in turn.tokens.iter().enumerate() {
            for label in &tok.labels {
                match label {
                    Label::Delete(i) if *i == rep.index => {
                        if pos <= ip {
                            note(pos);
                            rep.correspondences.push(Correspondence {
                                reparandum: Some(pos),
                                alteration: None,
                                kind: CorrKind::Delete,
                            });
                        } else {
                            rep.correspondences.push(Correspondence {
                                reparandum: None,
                                alteration: Some(pos),
                                kind: CorrKind::Insert,
                            });
                        }
                    }
                    Label::Onset(i) if *i == rep.index => {
                        if pos > ip {
                            return Err(annotation_error(
                                turn,
                                format!("sr{}< after its interruption point", rep.index),
                            ));
                        }
                        rep.reparandum_onset = Some(pos);
                        rep.explicit_onset = true;
                    }
                    _ => {}
                }
            }
        }
        if !rep.explicit_onset {
            rep.reparandum_onset = match (rep_side, rep.kind) {
                (Some(p), _) => Some(p),
                (None, RepairKind::Abr) => None,
                (None, _) => Some(ip),
            };
        }
        rep.correspondences.sort_by_key(|c| (c.reparandum, c.alteration));
    }
    repairs.sort_by_key(|r| (r.ip_position, r.index));
    Ok(repairs)
}
