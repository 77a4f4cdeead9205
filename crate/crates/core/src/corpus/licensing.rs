//! Bookkeeping for which reparandum words can still license an alteration
//! word. Shared by gold tag derivation and the decoder so both follow the
//! same rules.

use crate::tags::{Corr, RepairTag};
use serde::{Deserialize, Serialize};

/// Licensor candidates are the next unaccounted words, at most this many.
pub const LICENSOR_WINDOW: usize = 4;
/// A repair stops licensing after this many consecutive insertions.
pub const MAX_TRAILING_INSERTIONS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedWord {
    /// Token position in the turn.
    pub position: usize,
    pub fragment: bool,
}

/// One repair's removed speech and how much of it the alteration has
/// accounted for so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairTrack {
    pub tag: RepairTag,
    pub alteration_onset: usize,
    pub removed: Vec<RemovedWord>,
    /// Index into `removed` of the first word not yet passed over.
    pub next: usize,
    pub alteration_len: u32,
    pub trailing_x: u32,
    pub prev_c: Option<Corr>,
    pub closed: bool,
}

impl RepairTrack {
    pub fn new(tag: RepairTag, alteration_onset: usize, removed: Vec<RemovedWord>) -> Self {
        RepairTrack {
            tag,
            alteration_onset,
            removed,
            next: 0,
            alteration_len: 0,
            trailing_x: 0,
            prev_c: None,
            closed: false,
        }
    }

    /// Indices into `removed` of the licensor candidates, nearest first.
    pub fn candidates(&self) -> Vec<usize> {
        if self.closed {
            return Vec::new();
        }
        (self.next..self.removed.len())
            .filter(|&k| !self.removed[k].fragment)
            .take(LICENSOR_WINDOW)
            .collect()
    }

    pub fn is_open(&self) -> bool {
        !self.candidates().is_empty()
    }

    /// Records the correspondence of one alteration word. `l` is the 1-based
    /// candidate offset; for `Corr::X` nothing is consumed.
    pub fn account(&mut self, l: usize, c: Corr) {
        self.alteration_len += 1;
        match c {
            Corr::M | Corr::R => {
                let cands = self.candidates();
                self.next = cands[l - 1] + 1;
                self.trailing_x = 0;
                self.prev_c = Some(c);
            }
            Corr::X => {
                self.trailing_x += 1;
                if self.trailing_x >= MAX_TRAILING_INSERTIONS {
                    self.closed = true;
                }
            }
        }
    }

    /// Removed words skipped over if candidate `l` (1-based) were chosen.
    pub fn skipped(&self, l: usize) -> usize {
        let cands = self.candidates();
        cands[l - 1] - self.next
    }
}

/// Index of the most recent repair that can still license words.
pub fn active_track(tracks: &[RepairTrack]) -> Option<usize> {
    tracks.iter().rposition(RepairTrack::is_open)
}
