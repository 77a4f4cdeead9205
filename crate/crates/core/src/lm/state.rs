//! Per-hypothesis state: utterance-sensitive context, editing-term state
//! and the branching structure of repairs. Gold replay during training and
//! the decoder drive the same transitions.

use crate::corpus::licensing::{active_track, RemovedWord, RepairTrack};
use crate::eval::RepairSpan;
use crate::tags::{is_dm, Corr, EditTag, RepairTag, ToneTag, FILLED_PAUSE, FRAGMENT_WORD, TURN, TURN_WORD};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const TONE_MARKER: &str = "TONE";
pub const PUSH_MARKER: &str = "PUSH";
pub const MOD_MARKER: &str = "MOD";
pub const CAN_MARKER: &str = "CAN";

/// One entry of the utterance-sensitive context: a word or a marker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub pos: Arc<str>,
    pub word: Arc<str>,
    /// Turn position for words; `None` for markers.
    pub position: Option<usize>,
}

impl Item {
    pub fn word(pos: &str, word: &str, position: usize) -> Self {
        Item { pos: pos.into(), word: word.into(), position: Some(position) }
    }

    pub fn marker(name: &str) -> Self {
        Item { pos: name.into(), word: name.into(), position: None }
    }

    /// Stand-in for history positions before the turn start.
    pub fn turn_start() -> Self {
        Item { pos: TURN.into(), word: TURN_WORD.into(), position: None }
    }

    pub fn is_marker(&self) -> bool {
        self.position.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum EtState {
    #[default]
    Null,
    /// Inside an editing term made of filled pauses only.
    Fp,
    /// Inside an editing term with some other word.
    NonFp,
}

impl EtState {
    pub fn index(self) -> u32 {
        self as u32
    }
}

/// Features of one candidate reparandum onset.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetView<'a> {
    pub r: RepairTag,
    /// Turn position of the proposed onset.
    pub position: usize,
    pub len: usize,
    pub onset_pos: &'a str,
    /// Context before the proposed onset.
    pub prior: &'a [Item],
    pub tones: usize,
    pub dms: usize,
    pub fps: usize,
    /// 0 none, 1 before, 2 at, 3 after the previous repair's alteration onset.
    pub prev: u32,
}

/// Features of one licensor candidate of the active repair.
#[derive(Debug, Clone, PartialEq)]
pub struct LicensorView {
    pub r: RepairTag,
    pub licensor_pos: Arc<str>,
    pub licensor_word: Arc<str>,
    pub len: usize,
    pub rlen: usize,
    pub rrest: usize,
    pub alen: u32,
    /// 0 none, 1 match, 2 replacement.
    pub prev_c: u32,
    pub rep_x: usize,
    pub alt_x: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    /// Position of the word about to be predicted.
    pub position: usize,
    /// Utterance-sensitive words and markers.
    pub ctx: Vec<Item>,
    /// Index in `ctx` of the Push marker of an editing term in progress.
    pub push_at: Option<usize>,
    pub et_state: EtState,
    pub et_prev: u32,
    pub et_words: Vec<usize>,
    /// Editing term closed by a Pop on the current word.
    pub popped_et: Vec<usize>,
    /// Every word of the turn so far, by position.
    pub history: Vec<Item>,
    /// Current utterance: words not removed and not in editing terms.
    pub current: Vec<usize>,
    pub tracks: Vec<RepairTrack>,
    pub repairs: Vec<RepairSpan>,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    /// Context for the tone, editing-term and repair tags.
    pub fn t_ctx(&self) -> &[Item] {
        &self.ctx
    }

    /// Like `t_ctx`, without an editing term in progress.
    pub fn r_ctx(&self) -> &[Item] {
        &self.ctx[..self.push_at.unwrap_or(self.ctx.len())]
    }

    /// Tone, editing-term and repair combinations allowed next.
    pub fn legal_er(&self) -> Vec<(EditTag, RepairTag)> {
        legal_er(self.et_state)
    }

    /// Applies the tone and editing-term tags and, for repairs without an
    /// onset, the repair tag itself: Pop removes the editing term and its
    /// Push marker, a tone adds a marker unless a Mod or Can falls on the
    /// same word, Push opens an editing term.
    pub fn apply_ter(&mut self, t: ToneTag, e: EditTag, r: RepairTag) {
        self.popped_et.clear();
        if e == EditTag::Pop {
            if let Some(at) = self.push_at.take() {
                self.ctx.truncate(at);
            }
            self.popped_et = std::mem::take(&mut self.et_words);
            self.et_state = EtState::Null;
            self.et_prev = 0;
        }
        if t == ToneTag::Tone && !r.has_onset() {
            self.ctx.push(Item::marker(TONE_MARKER));
        }
        if e == EditTag::Push {
            self.push_at = Some(self.ctx.len());
            self.ctx.push(Item::marker(PUSH_MARKER));
            self.et_state = EtState::Fp;
            self.et_prev = 0;
            self.et_words.clear();
        }
        if r == RepairTag::Abr {
            self.open_repair(r, Vec::new());
        }
    }

    /// Marks a Mod or Can without resolving its onset.
    pub fn apply_marker(&mut self, r: RepairTag) {
        match r {
            RepairTag::Mod => self.ctx.push(Item::marker(MOD_MARKER)),
            RepairTag::Can => {
                if self.ctx.last().is_some_and(|i| &*i.pos == TONE_MARKER) {
                    self.ctx.pop();
                }
                self.ctx.push(Item::marker(CAN_MARKER));
            }
            _ => {}
        }
        self.open_repair(r, Vec::new());
    }

    /// Turn positions that may start the removed speech.
    pub fn onset_candidates(&self) -> &[usize] {
        &self.current
    }

    fn ctx_index(&self, position: usize) -> usize {
        self.ctx.iter().position(|i| i.position == Some(position)).expect("onset candidate missing from context")
    }

    /// Features for proposing `current[k]` as the onset of a repair `r`.
    pub fn onset_view(&self, r: RepairTag, k: usize) -> OnsetView<'_> {
        let position = self.current[k];
        let idx = self.ctx_index(position);
        let tail = &self.ctx[idx..];
        let last_word = tail.iter().rposition(|i| !i.is_marker()).unwrap_or(0);
        let tones = tail[..last_word].iter().filter(|i| &*i.pos == TONE_MARKER).count();
        let words: Vec<&Item> = self.current[k..].iter().map(|&p| &self.history[p]).collect();
        let mut dms = 0;
        for w in 1..words.len() {
            if is_dm(&words[w].pos) && !is_dm(&words[w - 1].pos) {
                dms += 1;
            }
        }
        let fps = words.iter().filter(|w| &*w.pos == FILLED_PAUSE).count();
        let prev = match self.repairs.last() {
            None => 0,
            Some(p) if position < p.onset => 1,
            Some(p) if position == p.onset => 2,
            Some(_) => 3,
        };
        OnsetView {
            r,
            position,
            len: self.current.len() - k,
            onset_pos: &self.history[position].pos,
            prior: &self.ctx[..idx],
            tones,
            dms,
            fps,
            prev,
        }
    }

    /// Removes `current[k..]` and the context from the onset on; a Can
    /// then drops a trailing tone marker and leaves its own marker.
    pub fn apply_onset(&mut self, r: RepairTag, k: usize) {
        let idx = self.ctx_index(self.current[k]);
        self.ctx.truncate(idx);
        let removed = self.current.split_off(k);
        if r == RepairTag::Can {
            if self.ctx.last().is_some_and(|i| &*i.pos == TONE_MARKER) {
                self.ctx.pop();
            }
            self.ctx.push(Item::marker(CAN_MARKER));
        }
        self.open_repair(r, removed);
    }

    fn open_repair(&mut self, r: RepairTag, removed: Vec<usize>) {
        let words = removed
            .iter()
            .map(|&p| RemovedWord { position: p, fragment: &*self.history[p].word == FRAGMENT_WORD })
            .collect();
        self.tracks.push(RepairTrack::new(r, self.position, words));
        self.repairs.push(RepairSpan {
            onset: self.position,
            tag: r,
            ambiguous: false,
            removed,
            editing_term: self.popped_et.clone(),
        });
    }

    /// Index of the repair whose removed speech licenses the next word.
    pub fn active(&self) -> Option<usize> {
        active_track(&self.tracks)
    }

    /// Licensor candidate views of the active repair, nearest first.
    pub fn licensor_views(&self) -> Vec<LicensorView> {
        let Some(k) = self.active() else { return Vec::new() };
        let track = &self.tracks[k];
        track
            .candidates()
            .into_iter()
            .enumerate()
            .map(|(l, idx)| {
                let item = &self.history[track.removed[idx].position];
                LicensorView {
                    r: track.tag,
                    licensor_pos: item.pos.clone(),
                    licensor_word: item.word.clone(),
                    len: track.removed.len(),
                    rlen: track.next,
                    rrest: track.removed.len() - track.next,
                    alen: track.alteration_len,
                    prev_c: match track.prev_c {
                        None | Some(Corr::X) => 0,
                        Some(Corr::M) => 1,
                        Some(Corr::R) => 2,
                    },
                    rep_x: track.skipped(l + 1),
                    alt_x: track.trailing_x,
                }
            })
            .collect()
    }

    pub fn apply_licensor(&mut self, l: usize, c: Corr) {
        let k = self.active().expect("no active repair");
        self.tracks[k].account(l, c);
    }

    /// Appends the word with its POS tag. Editing-term words stay in the
    /// context until the Pop but never join the current utterance.
    pub fn push_word(&mut self, e: EditTag, pos: &str, word: &str) {
        let item = Item::word(pos, word, self.position);
        self.history.push(item.clone());
        if matches!(e, EditTag::Push | EditTag::Et) {
            self.et_prev += 1;
            if pos != FILLED_PAUSE {
                self.et_state = EtState::NonFp;
            }
            self.et_words.push(self.position);
        } else if pos != TURN {
            self.current.push(self.position);
        }
        self.ctx.push(item);
        self.position += 1;
    }

    /// Positions neither removed by a repair nor part of an editing term.
    pub fn corrected(&self) -> Vec<usize> {
        let mut gone = vec![false; self.history.len()];
        for r in &self.repairs {
            for &p in r.removed.iter().chain(&r.editing_term) {
                gone[p] = true;
            }
        }
        for &p in &self.et_words {
            gone[p] = true;
        }
        (0..self.history.len()).filter(|&p| !gone[p] && &*self.history[p].pos != TURN).collect()
    }
}

/// Editing-term and repair tag pairs allowed in an editing-term state.
pub fn legal_er(et: EtState) -> Vec<(EditTag, RepairTag)> {
    if et == EtState::Null {
        vec![
            (EditTag::Null, RepairTag::Null),
            (EditTag::Null, RepairTag::Mod),
            (EditTag::Null, RepairTag::Can),
            (EditTag::Push, RepairTag::Null),
        ]
    } else {
        vec![
            (EditTag::Et, RepairTag::Null),
            (EditTag::Pop, RepairTag::Mod),
            (EditTag::Pop, RepairTag::Can),
            (EditTag::Pop, RepairTag::Abr),
        ]
    }
}
