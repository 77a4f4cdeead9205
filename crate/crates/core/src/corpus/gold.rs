use super::licensing::{active_track, RemovedWord, RepairTrack};
use super::{
    derive_correspondences, repair_annotations, CorpusError, CorrKind, RepairAnnotation,
    RepairKind, Turn,
};
use crate::tags::{Corr, EditTag, RepairTag, ToneTag, TURN};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tags of the transition before word `i`, plus its correction tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoldTag {
    pub t: ToneTag,
    pub e: EditTag,
    pub r: RepairTag,
    /// Token position of the removed-speech onset.
    pub o: Option<usize>,
    /// 1-based offset of the licensor among the current candidates.
    pub l: Option<u8>,
    pub c: Option<Corr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRepair {
    /// Alteration onset, the position carrying the repair tag.
    pub onset: usize,
    pub kind: RepairKind,
    /// Positions of the removed speech in turn order.
    pub removed: Vec<usize>,
    pub editing_term: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoldWarning {
    /// The annotated licensor lies beyond the candidate window; tagged `x`.
    LicensorOutOfWindow { position: usize, offset: usize },
    /// A match whose words differ was tagged as a replacement.
    MatchDowngraded { position: usize },
    /// A correspondence between different POS tags was tagged `x`.
    CorrespondenceDropped { position: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldTurn {
    pub speaker: String,
    pub id: String,
    pub words: Vec<String>,
    pub pos: Vec<String>,
    pub fragments: Vec<bool>,
    pub silences: Vec<Option<f64>>,
    pub tags: Vec<GoldTag>,
    pub repairs: Vec<GoldRepair>,
    pub warnings: Vec<GoldWarning>,
}

impl GoldTurn {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Whether a boundary tone follows word `j`.
    pub fn tone_after(&self, j: usize) -> bool {
        self.tags.get(j + 1).is_some_and(|t| t.t == ToneTag::Tone)
    }
}

fn err(turn: &Turn, message: String) -> CorpusError {
    CorpusError::Annotation { turn: turn.id.clone(), message }
}

/// Derives per-word gold tags from a normalized turn.
///
/// Repairs without any correspondence labels get automatically aligned
/// correspondences. Licensor offsets beyond the candidate window are tagged
/// `x` and reported in `warnings`.
pub fn derive_gold_tags(turn: &Turn) -> Result<GoldTurn, CorpusError> {
    let n = turn.tokens.len();
    let mut anns: Vec<RepairAnnotation> = repair_annotations(turn)?;
    for ann in &mut anns {
        if ann.correspondences.is_empty() && ann.kind != RepairKind::Abr {
            *ann = derive_correspondences(ann, turn);
        }
    }
    let mut by_onset: BTreeMap<usize, usize> = BTreeMap::new();
    for (k, ann) in anns.iter().enumerate() {
        if by_onset.insert(ann.alteration_onset(), k).is_some() {
            return Err(err(turn, format!("two repairs share alteration onset {}", ann.alteration_onset())));
        }
        if ann.alteration_onset() >= n {
            return Err(err(turn, format!("repair ip{} has no alteration", ann.index)));
        }
    }

    let is_et = |i: usize| turn.tokens[i].is_et();
    let mut tags = vec![GoldTag::default(); n];
    for i in 0..n {
        let tag = &mut tags[i];
        if i > 0 && turn.tokens[i - 1].has_tone() {
            tag.t = ToneTag::Tone;
        }
        tag.e = if is_et(i) {
            if i > 0 && is_et(i - 1) {
                EditTag::Et
            } else {
                EditTag::Push
            }
        } else if i > 0 && is_et(i - 1) {
            EditTag::Pop
        } else {
            EditTag::Null
        };
        if let Some(&k) = by_onset.get(&i) {
            tag.r = anns[k].kind.tag();
        }
        let legal = match tag.e {
            EditTag::Pop => tag.r != RepairTag::Null,
            EditTag::Push | EditTag::Et => tag.r == RepairTag::Null,
            EditTag::Null => tag.r != RepairTag::Abr,
        };
        if !legal {
            return Err(err(
                turn,
                format!("position {i}: editing term tag {} cannot go with repair tag {}", tag.e, tag.r),
            ));
        }
    }

    // Current utterance as token positions, and the node each word hangs from.
    let mut current: Vec<usize> = Vec::new();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut tracks: Vec<RepairTrack> = Vec::new();
    let mut track_pairs: Vec<BTreeMap<usize, (usize, CorrKind)>> = Vec::new();
    let mut repairs = Vec::new();
    let mut warnings = Vec::new();
    for i in 0..n {
        if let Some(&k) = by_onset.get(&i) {
            let ann = &anns[k];
            let mut removed = Vec::new();
            if let Some(onset) = ann.reparandum_onset {
                if is_et(onset) {
                    return Err(err(turn, format!("reparandum of ip{} starts in an editing term", ann.index)));
                }
                let cut = match parent[onset] {
                    None => 0,
                    Some(p) => match current.iter().position(|&q| q == p) {
                        Some(idx) => idx + 1,
                        None => {
                            return Err(err(
                                turn,
                                format!("reparandum of ip{} does not branch from the current utterance", ann.index),
                            ))
                        }
                    },
                };
                if cut >= current.len() {
                    return Err(err(turn, format!("repair ip{} removes no speech", ann.index)));
                }
                removed = current.split_off(cut);
                tags[i].o = Some(removed[0]);
            }
            let words = removed
                .iter()
                .map(|&p| RemovedWord { position: p, fragment: turn.tokens[p].is_fragment() })
                .collect();
            tracks.push(RepairTrack::new(ann.kind.tag(), i, words));
            track_pairs.push(
                ann.correspondences
                    .iter()
                    .filter_map(|c| Some((c.alteration?, (c.reparandum?, c.kind))))
                    .collect(),
            );
            repairs.push(GoldRepair {
                onset: i,
                kind: ann.kind,
                removed,
                editing_term: ann.editing_term.clone().collect(),
            });
        }
        if is_et(i) {
            continue;
        }
        if let Some(k) = active_track(&tracks) {
            let cands = tracks[k].candidates();
            let mut choice = (1usize, Corr::X);
            if let Some(&(rep_pos, kind)) = track_pairs[k].get(&i) {
                let offset = tracks[k].removed.iter().position(|w| w.position == rep_pos);
                let in_window = cands.iter().position(|&c| Some(c) == offset);
                match (kind, in_window) {
                    (CorrKind::Match | CorrKind::Replace, Some(l)) => {
                        let (a, b) = (&turn.tokens[rep_pos], &turn.tokens[i]);
                        if a.pos != b.pos {
                            warnings.push(GoldWarning::CorrespondenceDropped { position: i });
                        } else if kind == CorrKind::Match && a.surface != b.surface {
                            warnings.push(GoldWarning::MatchDowngraded { position: i });
                            choice = (l + 1, Corr::R);
                        } else {
                            let c = if kind == CorrKind::Match { Corr::M } else { Corr::R };
                            choice = (l + 1, c);
                        }
                    }
                    (CorrKind::Match | CorrKind::Replace, None) => {
                        if let Some(o) = offset.filter(|&o| o >= tracks[k].next) {
                            let rank = (tracks[k].next..=o)
                                .filter(|&q| !tracks[k].removed[q].fragment)
                                .count();
                            warnings.push(GoldWarning::LicensorOutOfWindow { position: i, offset: rank });
                        }
                    }
                    _ => {}
                }
            }
            tags[i].l = Some(choice.0 as u8);
            tags[i].c = Some(choice.1);
            tracks[k].account(choice.0, choice.1);
        }
        if turn.tokens[i].pos != TURN {
            parent[i] = current.last().copied();
            current.push(i);
        }
    }

    Ok(GoldTurn {
        speaker: turn.speaker.clone(),
        id: turn.id.clone(),
        words: turn.tokens.iter().map(|t| t.surface.clone()).collect(),
        pos: turn.tokens.iter().map(|t| t.pos.clone()).collect(),
        fragments: turn.tokens.iter().map(|t| t.is_fragment()).collect(),
        silences: turn.silences.clone(),
        tags,
        repairs,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{normalize_tokens, parse_corpus};

    fn gold(src: &str) -> GoldTurn {
        let c = parse_corpus(&format!("#DIALOG d\n#TURN A t\n{src}\n")).unwrap();
        derive_gold_tags(&normalize_tokens(&c.dialogs[0].turns[0]).unwrap()).unwrap()
    }

    fn render(g: &GoldTurn) -> String {
        let mut out = Vec::new();
        for (i, w) in g.words.iter().enumerate() {
            let t = g.tags[i];
            for s in [t.t.to_string(), t.e.to_string(), t.r.to_string()] {
                if s != "null" {
                    out.push(s);
                }
            }
            out.push(w.clone());
        }
        out.join(" ")
    }

    #[test]
    fn editing_term_tags() {
        let g = gold(
            "we/PRP need/VBP it/PRP by/PREP eight/CD a.m./NN|m1,ip:mod oh/UH_D|et sorry/UH_D|et at/PREP|r1 nine/CD",
        );
        assert!(render(&g).contains("a.m. Push oh ET sorry Pop Mod at"), "{}", render(&g));
        assert_eq!(g.tags[8].o, Some(5));
        assert_eq!(g.tags[8].c, Some(Corr::X));
    }

    #[test]
    fn fluent_turn_has_only_null_tags() {
        let g = gold("okay/AC|tone let's/VB^PRP go/VB");
        assert!(g.tags[..1].iter().all(|t| *t == GoldTag::default()));
        assert_eq!(g.tags[1].t, ToneTag::Tone);
        assert!(g.tags[2..].iter().all(|t| *t == GoldTag::default()));
        assert!(g.repairs.is_empty());
    }

    #[test]
    fn overlapping_repairs_of_total_of() {
        let g = gold(
            "and/CC_D that/DP will/MD take/VBP a/DT total/NN|m11 of/PREP|m12,ip10:mod um/UH_FP|et \
             let's/VB^PRP|et see/VB|et total/NN|m11 of/PREP|m12,m21 s-/CD|ip20:mod of/PREP|m21 seven/CD hours/NNS",
        );
        let mods: Vec<_> = g.tags.iter().enumerate().filter(|(_, t)| t.r == RepairTag::Mod).collect();
        assert_eq!(mods.len(), 2);
        // First repair removes "total of", second removes "of s-".
        assert_eq!(g.repairs[0].removed, vec![5, 6]);
        assert_eq!(g.repairs[1].removed, vec![12, 13]);
        assert_eq!(mods[1].1.o, Some(12));
        assert_eq!(g.words[12], "of");
        // The third "of" is licensed by the second, the fragment is skipped.
        assert_eq!((g.tags[14].l, g.tags[14].c), (Some(1), Some(Corr::M)));
        assert_eq!((g.tags[11].l, g.tags[11].c), (Some(1), Some(Corr::M)));
    }

    #[test]
    fn removed_speech_matches_reparandum_for_simple_repairs() {
        let g = gold("you/PRP can/MD carry/VB|r1 them/PRP|x both/DT|m2 on/RP|m3,ip:mod tow/VB|r1 both/DT|m2 on/RP|m3 the/DT same/JJ engine/NN");
        assert_eq!(g.repairs[0].removed, vec![2, 3, 4, 5]);
        let lc: Vec<_> = (6..9).map(|i| (g.tags[i].l.unwrap(), g.tags[i].c.unwrap())).collect();
        assert_eq!(lc, vec![(1, Corr::R), (2, Corr::M), (1, Corr::M)]);
        // Nothing left to license afterwards.
        assert_eq!(g.tags[9].l, None);
    }

    #[test]
    fn insertions_close_the_repair_after_three() {
        let g = gold("the/DT|m1 entire/JJ|ip:mod the/DT|m1 load/NN of/PREP oranges/NNS today/NN");
        let cs: Vec<_> = g.tags.iter().map(|t| t.c).collect();
        assert_eq!(cs[2], Some(Corr::M));
        assert_eq!(&cs[3..6], &[Some(Corr::X); 3]);
        assert_eq!(cs[6], None);
    }

    #[test]
    fn fresh_start_with_explicit_onset() {
        let g = gold("we/PRP|sr10< should/MD|ip10:can okay/AC so/CC_D");
        assert_eq!(g.tags[2].r, RepairTag::Can);
        assert_eq!(g.tags[2].o, Some(0));
        assert_eq!(g.repairs[0].removed, vec![0, 1]);
    }

    #[test]
    fn abridged_repair_needs_editing_term() {
        let g = gold("we/PRP need/VBP|ip:abr um/UH_FP|et a/DT tanker/NN");
        assert_eq!((g.tags[3].e, g.tags[3].r, g.tags[3].o), (EditTag::Pop, RepairTag::Abr, None));
        let c = parse_corpus("#DIALOG d\n#TURN A t\nwe/PRP|ip:abr go/VB\n").unwrap();
        assert!(derive_gold_tags(&normalize_tokens(&c.dialogs[0].turns[0]).unwrap()).is_err());
    }

    #[test]
    fn out_of_window_licensor_is_clamped() {
        let g = gold("a/DT|m1 b/NN c/NN d/NN e/NN f/NN|ip:mod a/DT|m1");
        assert!(g.warnings.is_empty());
        let g = gold("a/DT|x b/NN c/NN d/NN e/NN f/NN|m1,ip:mod f/NN|m1");
        assert_eq!(g.tags[6].c, Some(Corr::X));
        assert!(matches!(g.warnings[0], GoldWarning::LicensorOutOfWindow { offset: 6, .. }));
    }
}
