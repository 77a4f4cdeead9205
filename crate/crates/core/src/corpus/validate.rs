use super::{normalize_tokens, repair_annotations, Corpus, Label, Turn};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    IndexSpacing,
    CrossingCorrespondence,
    ReparandumConstraint,
    EditingTerm,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub dialog: String,
    pub turn: String,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}: {:?}: {}", self.dialog, self.turn, self.kind, self.message)
    }
}

/// Reports annotation problems; an empty list means the corpus is clean.
/// Positions in messages refer to normalized tokens.
pub fn validate(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    for dialog in &corpus.dialogs {
        for turn in &dialog.turns {
            let mut push = |kind, message: String| {
                out.push(Violation { dialog: dialog.id.clone(), turn: turn.id.clone(), kind, message })
            };
            match normalize_tokens(turn) {
                Ok(t) => check_turn(&t, &mut push),
                Err(e) => push(ViolationKind::Annotation, e.to_string()),
            }
        }
    }
    out
}

fn check_turn(turn: &Turn, push: &mut impl FnMut(ViolationKind, String)) {
    let mut indices: Vec<u32> = turn
        .tokens
        .iter()
        .flat_map(|t| &t.labels)
        .filter_map(|l| match l {
            Label::Ip { index, .. } => Some(*index),
            _ => None,
        })
        .collect();
    indices.sort_unstable();
    for w in indices.windows(2) {
        if w[1] - w[0] < 10 {
            push(ViolationKind::IndexSpacing, format!("repair indices {} and {} are closer than 10", w[0], w[1]));
        }
    }

    let anns = match repair_annotations(turn) {
        Ok(a) => a,
        Err(e) => {
            push(ViolationKind::Annotation, e.to_string());
            return;
        }
    };

    for ann in &anns {
        let pairs: Vec<(usize, usize)> = ann.pairs().map(|(r, a, _)| (r, a)).collect();
        for (k, &(r1, a1)) in pairs.iter().enumerate() {
            for &(r2, a2) in &pairs[k + 1..] {
                if (r1 < r2) != (a1 < a2) {
                    push(
                        ViolationKind::CrossingCorrespondence,
                        format!("ip{}: correspondences ({r1},{a1}) and ({r2},{a2}) cross", ann.index),
                    );
                }
            }
        }
    }

    for (pos, tok) in turn.tokens.iter().enumerate() {
        if tok.is_et() && !anns.iter().any(|a| a.editing_term.contains(&pos)) {
            push(ViolationKind::EditingTerm, format!("editing-term word at {pos} does not follow an interruption point"));
        }
    }

    // Replay the current utterance: each reparandum onset must hang from a
    // word that is still part of it.
    let mut current: Vec<usize> = Vec::new();
    let mut parent: Vec<Option<usize>> = vec![None; turn.tokens.len()];
    for (pos, tok) in turn.tokens.iter().enumerate() {
        for ann in anns.iter().filter(|a| a.alteration_onset() == pos) {
            let Some(onset) = ann.reparandum_onset else { continue };
            if tok.is_et() || turn.tokens[onset].is_et() {
                continue;
            }
            let cut = match parent[onset] {
                None => Some(0),
                Some(p) => current.iter().position(|&q| q == p).map(|i| i + 1),
            };
            match cut {
                Some(c) if c < current.len() => current.truncate(c),
                _ => push(
                    ViolationKind::ReparandumConstraint,
                    format!("ip{}: reparandum onset {onset} does not branch from the prior of the repair", ann.index),
                ),
            }
        }
        if !tok.is_et() && tok.pos != crate::tags::TURN {
            parent[pos] = current.last().copied();
            current.push(pos);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    fn check(src: &str) -> Vec<ViolationKind> {
        let c = parse_corpus(&format!("#DIALOG d\n#TURN A t\n{src}\n")).unwrap();
        validate(&c).into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn clean_turn_has_no_violations() {
        assert!(check("the/DT|m1 engine/NN|ip:mod um/UH_FP|et the/DT|m1 tanker/NN").is_empty());
        assert!(check("okay/AC|tone").is_empty());
    }

    #[test]
    fn crossing_pairs_are_flagged() {
        let v = check("a/DT|m1 b/NN|m2,ip:mod b/NN|m2 a/DT|m1");
        assert_eq!(v, vec![ViolationKind::CrossingCorrespondence]);
    }

    #[test]
    fn close_indices_are_flagged() {
        let v = check("a/DT|ip10:mod b/NN|ip15:mod c/NN d/NN");
        assert!(v.contains(&ViolationKind::IndexSpacing));
    }

    #[test]
    fn stray_editing_term() {
        assert_eq!(check("a/DT um/UH_FP|et b/NN"), vec![ViolationKind::EditingTerm]);
    }

    #[test]
    fn onset_must_branch_from_current_utterance() {
        let v = check("x/DT a/NN|sr10< b/NN|ip10:can c/NN d/NN|ip20:can,sr20< e/NN");
        assert!(v.is_empty(), "{v:?}");
        // The second onset hangs from a word the first repair removed.
        let v = check("x/DT a/NN b/NN|sr10< c/NN|ip10:can,sr20< d/NN e/NN|ip20:can f/NN");
        assert_eq!(v, vec![ViolationKind::ReparandumConstraint]);
    }
}
