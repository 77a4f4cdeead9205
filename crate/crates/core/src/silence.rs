//! Silence-duration preference factors for utterance tag transitions.

use crate::corpus::GoldTurn;
use crate::tags::{EditTag, RepairTag, ToneTag, FRAGMENT_WORD, TURN_WORD};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const BUCKETS: usize = 30;
pub const SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransitionClass {
    Tone,
    Push,
    Pop,
    Cancel,
    Modification,
    Fluent,
}

impl TransitionClass {
    pub const ALL: [TransitionClass; 6] = [
        TransitionClass::Tone,
        TransitionClass::Push,
        TransitionClass::Pop,
        TransitionClass::Cancel,
        TransitionClass::Modification,
        TransitionClass::Fluent,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TransitionClass::Tone => "Tone",
            TransitionClass::Push => "Push",
            TransitionClass::Pop => "Pop",
            TransitionClass::Cancel => "Cancel",
            TransitionClass::Modification => "Modification",
            TransitionClass::Fluent => "Fluent",
        }
    }
}

/// Class of a legal (T, E, R) combination; a tone outranks everything else.
pub fn classify_transition(t: ToneTag, e: EditTag, r: RepairTag) -> TransitionClass {
    if t == ToneTag::Tone {
        return TransitionClass::Tone;
    }
    match (e, r) {
        (EditTag::Push, _) => TransitionClass::Push,
        (EditTag::Pop, _) => TransitionClass::Pop,
        (_, RepairTag::Can) => TransitionClass::Cancel,
        (_, RepairTag::Mod) => TransitionClass::Modification,
        _ => TransitionClass::Fluent,
    }
}

/// Silence in the gap before word `i`, or `None` where no silence feature
/// applies: the first word, the end-of-turn token, and gaps after fragments.
/// A gap without a recorded silence counts as zero seconds.
pub fn gap_before(words: &[String], silences: &[Option<f64>], i: usize) -> Option<f64> {
    if i == 0 || words[i] == TURN_WORD || words[i - 1] == FRAGMENT_WORD {
        return None;
    }
    Some(silences.get(i - 1).copied().flatten().unwrap_or(0.0))
}

/// (duration, class) pairs for every usable gap in the gold turns. Turns
/// without any recorded silence contribute nothing.
pub fn silence_observations(turns: &[GoldTurn]) -> Vec<(f64, TransitionClass)> {
    let mut out = Vec::new();
    for turn in turns {
        if turn.silences.iter().all(Option::is_none) {
            continue;
        }
        for i in 0..turn.len() {
            if let Some(d) = gap_before(&turn.words, &turn.silences, i) {
                let tag = turn.tags[i];
                out.push((d, classify_transition(tag.t, tag.e, tag.r)));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilenceTable {
    /// Upper boundaries of all buckets but the last.
    pub boundaries: Vec<f64>,
    /// `factors[bucket][class]`.
    pub factors: Vec<[f64; 6]>,
    pub sigma: f64,
}

impl Default for SilenceTable {
    fn default() -> Self {
        SilenceTable::flat()
    }
}

impl SilenceTable {
    /// One bucket, every factor 1.
    pub fn flat() -> Self {
        SilenceTable { boundaries: Vec::new(), factors: vec![[1.0; 6]], sigma: SIGMA }
    }

    pub fn is_flat(&self) -> bool {
        self.factors.iter().all(|row| row.iter().all(|&f| f == 1.0))
    }

    /// Equal-quantile buckets over the observed durations; class counts are
    /// smoothed across neighbouring buckets with a gaussian of width `SIGMA`
    /// and turned into `Pr(class|bucket) / Pr(class)`. Buckets without
    /// observations keep factor 1.
    pub fn train(observations: &[(f64, TransitionClass)]) -> Self {
        if observations.is_empty() {
            return SilenceTable::flat();
        }
        let mut durations: Vec<f64> = observations.iter().map(|o| o.0).collect();
        durations.sort_by(f64::total_cmp);
        let n = durations.len();
        let boundaries: Vec<f64> = (1..BUCKETS).map(|k| durations[(k * n / BUCKETS).min(n - 1)]).collect();
        let mut table = SilenceTable { boundaries, factors: vec![[1.0; 6]; BUCKETS], sigma: SIGMA };

        let mut counts = vec![[0.0f64; 6]; BUCKETS];
        let mut totals = [0.0f64; 6];
        for &(d, c) in observations {
            counts[table.bucket(d)][c.index()] += 1.0;
            totals[c.index()] += 1.0;
        }
        let reach = (3.0 * SIGMA).ceil() as isize;
        for b in 0..BUCKETS {
            if counts[b].iter().sum::<f64>() == 0.0 {
                continue;
            }
            let mut smooth = [0.0f64; 6];
            for off in -reach..=reach {
                let j = b as isize + off;
                if j < 0 || j >= BUCKETS as isize {
                    continue;
                }
                let w = (-((off * off) as f64) / (2.0 * SIGMA * SIGMA)).exp();
                for c in 0..6 {
                    smooth[c] += w * counts[j as usize][c];
                }
            }
            let z: f64 = smooth.iter().sum();
            for c in 0..6 {
                if totals[c] > 0.0 {
                    table.factors[b][c] = (smooth[c] / z) / (totals[c] / n as f64);
                }
            }
        }
        table
    }

    pub fn from_gold(turns: &[GoldTurn]) -> Self {
        SilenceTable::train(&silence_observations(turns))
    }

    pub fn bucket(&self, duration: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= duration).min(self.factors.len() - 1)
    }

    pub fn factor(&self, class: TransitionClass, duration: f64) -> f64 {
        self.factors[self.bucket(duration)][class.index()]
    }

    /// Rescales a distribution over transition classes by the factors at
    /// `duration` and renormalizes. Returns the input untouched when every
    /// factor involved is 1 or the rescaled mass vanishes.
    pub fn adjust(&self, dist: &[(TransitionClass, f64)], duration: f64) -> Vec<f64> {
        let row = &self.factors[self.bucket(duration)];
        let original: Vec<f64> = dist.iter().map(|d| d.1).collect();
        if dist.iter().all(|(c, _)| row[c.index()] == 1.0) {
            return original;
        }
        let scaled: Vec<f64> = dist.iter().map(|(c, p)| p * row[c.index()]).collect();
        let z: f64 = scaled.iter().sum();
        if z <= 0.0 {
            return original;
        }
        scaled.into_iter().map(|p| p / z).collect()
    }

    /// One row per bucket: index, bounds, then a factor per class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,lower,upper");
        for c in TransitionClass::ALL {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for (b, row) in self.factors.iter().enumerate() {
            let lower = if b == 0 { f64::NEG_INFINITY } else { self.boundaries[b - 1] };
            let upper = self.boundaries.get(b).copied().unwrap_or(f64::INFINITY);
            let _ = write!(out, "{b},{lower},{upper}");
            for f in row {
                let _ = write!(out, ",{f}");
            }
            out.push('\n');
        }
        out
    }
}
