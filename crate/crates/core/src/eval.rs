//! Scoring: confusion counts, perplexity, and POS, discourse-marker, tone
//! and repair metrics over positionally aligned gold and hypothesis tags.

use crate::corpus::{GoldRepair, RepairKind};
use crate::tags::{collapse_dm, is_dm, RepairTag, ToneTag, TURN};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} positions but hypothesis has {hyp}")]
    LengthMismatch { gold: usize, hyp: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub hits: u64,
    pub misses: u64,
    pub false_positives: u64,
    pub correct_rejections: u64,
}

impl ConfusionCounts {
    pub fn new(hits: u64, misses: u64, false_positives: u64) -> Self {
        ConfusionCounts { hits, misses, false_positives, correct_rejections: 0 }
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.hits += other.hits;
        self.misses += other.misses;
        self.false_positives += other.false_positives;
        self.correct_rejections += other.correct_rejections;
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.hits, self.hits + self.misses)
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.hits, self.hits + self.false_positives)
    }

    /// Misses plus false positives over the number of gold events; may exceed 1.
    pub fn error(&self) -> Option<f64> {
        ratio(self.misses + self.false_positives, self.hits + self.misses)
    }

    pub fn f1(&self) -> Option<f64> {
        let (r, p) = (self.recall()?, self.precision()?);
        if r + p == 0.0 {
            Some(0.0)
        } else {
            Some(2.0 * r * p / (r + p))
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Recall, precision and error rate; `None` where the denominator is zero.
pub fn recall_precision_error(c: &ConfusionCounts) -> (Option<f64>, Option<f64>, Option<f64>) {
    (c.recall(), c.precision(), c.error())
}

/// Running perplexity over per-word probabilities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerplexityAccumulator {
    pub log2_sum: f64,
    pub words: u64,
    /// Set once a zero-probability event has been seen.
    pub zero: bool,
}

impl PerplexityAccumulator {
    pub fn add_prob(&mut self, p: f64) {
        self.words += 1;
        if p > 0.0 {
            self.log2_sum += p.log2();
        } else {
            self.zero = true;
        }
    }

    pub fn add_log2(&mut self, lp: f64) {
        self.words += 1;
        if lp.is_finite() {
            self.log2_sum += lp;
        } else {
            self.zero = true;
        }
    }

    pub fn merge(&mut self, other: &PerplexityAccumulator) {
        self.log2_sum += other.log2_sum;
        self.words += other.words;
        self.zero |= other.zero;
    }

    /// `None` before any word; infinity after a zero-probability word.
    pub fn perplexity(&self) -> Option<f64> {
        if self.words == 0 {
            None
        } else if self.zero {
            Some(f64::INFINITY)
        } else {
            Some((-self.log2_sum / self.words as f64).exp2())
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosScore {
    pub errors: u64,
    pub total: u64,
}

impl PosScore {
    pub fn add(&mut self, other: &PosScore) {
        self.errors += other.errors;
        self.total += other.total;
    }

    pub fn error_rate(&self) -> Option<f64> {
        ratio(self.errors, self.total)
    }
}

fn check_len(gold: usize, hyp: usize) -> Result<(), EvalError> {
    if gold == hyp {
        Ok(())
    } else {
        Err(EvalError::LengthMismatch { gold, hyp })
    }
}

/// POS errors over non-`TURN` tokens. With `ignore_dm`, discourse-marker
/// tags are collapsed onto their non-marker counterparts first.
pub fn score_pos<S: AsRef<str>>(gold: &[S], hyp: &[S], ignore_dm: bool) -> Result<PosScore, EvalError> {
    check_len(gold.len(), hyp.len())?;
    let mut s = PosScore::default();
    for (g, h) in gold.iter().zip(hyp) {
        let (g, h) = (g.as_ref(), h.as_ref());
        if g == TURN {
            continue;
        }
        s.total += 1;
        let same = if ignore_dm { collapse_dm(g) == collapse_dm(h) } else { g == h };
        if !same {
            s.errors += 1;
        }
    }
    Ok(s)
}

pub fn score_dm<S: AsRef<str>>(gold: &[S], hyp: &[S]) -> Result<ConfusionCounts, EvalError> {
    check_len(gold.len(), hyp.len())?;
    let mut c = ConfusionCounts::default();
    for (g, h) in gold.iter().zip(hyp) {
        if g.as_ref() == TURN {
            continue;
        }
        match (is_dm(g.as_ref()), is_dm(h.as_ref())) {
            (true, true) => c.hits += 1,
            (true, false) => c.misses += 1,
            (false, true) => c.false_positives += 1,
            (false, false) => c.correct_rejections += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToneScores {
    pub within: ConfusionCounts,
    pub end: ConfusionCounts,
    pub all: ConfusionCounts,
}

impl ToneScores {
    pub fn add(&mut self, other: &ToneScores) {
        self.within.add(&other.within);
        self.end.add(&other.end);
        self.all.add(&other.all);
    }
}

/// Scores tone tags of one turn. Tag `i` is the transition before word `i`;
/// the last word is `<turn>`, so a tone on the last tag ends the turn.
pub fn score_tones(gold: &[ToneTag], hyp: &[ToneTag]) -> Result<ToneScores, EvalError> {
    check_len(gold.len(), hyp.len())?;
    let mut s = ToneScores::default();
    let n = gold.len();
    for i in 1..n {
        let bucket = if i + 1 == n { &mut s.end } else { &mut s.within };
        let c = match (gold[i] == ToneTag::Tone, hyp[i] == ToneTag::Tone) {
            (true, true) => ConfusionCounts { hits: 1, ..Default::default() },
            (true, false) => ConfusionCounts { misses: 1, ..Default::default() },
            (false, true) => ConfusionCounts { false_positives: 1, ..Default::default() },
            (false, false) => ConfusionCounts { correct_rejections: 1, ..Default::default() },
        };
        bucket.add(&c);
        s.all.add(&c);
    }
    Ok(s)
}

/// A gold or hypothesized repair in token positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairSpan {
    /// Position carrying the repair tag.
    pub onset: usize,
    pub tag: RepairTag,
    pub ambiguous: bool,
    pub removed: Vec<usize>,
    pub editing_term: Vec<usize>,
}

impl From<&GoldRepair> for RepairSpan {
    fn from(g: &GoldRepair) -> Self {
        RepairSpan {
            onset: g.onset,
            tag: g.kind.tag(),
            ambiguous: g.kind.is_ambiguous(),
            removed: g.removed.clone(),
            editing_term: g.editing_term.clone(),
        }
    }
}

impl RepairSpan {
    pub fn kind(&self) -> RepairKind {
        match (self.tag, self.ambiguous) {
            (RepairTag::Mod, true) => RepairKind::ModAmbiguous,
            (RepairTag::Can, true) => RepairKind::CanAmbiguous,
            (RepairTag::Can, false) => RepairKind::Can,
            (RepairTag::Abr, _) => RepairKind::Abr,
            _ => RepairKind::Mod,
        }
    }

    fn corrected_by(&self, hyp: &RepairSpan) -> bool {
        self.removed == hyp.removed && self.editing_term == hyp.editing_term
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepairMode {
    All,
    Exact,
}

/// Gold repairs whose removed speech runs into each other: each later
/// member's removed speech starts no later than the previous alteration onset.
fn contiguous_groups(gold: &[RepairSpan]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, g) in gold.iter().enumerate() {
        let joins = groups.last().is_some_and(|grp| {
            let prev = &gold[*grp.last().unwrap()];
            !prev.removed.is_empty() && g.removed.first().is_some_and(|&s| s <= prev.onset)
        });
        if joins {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    groups
}

/// Marks gold repairs whose contiguous group is removed in one piece by a
/// single hypothesized repair; returns the matched hypothesis indices.
fn group_hits(gold: &[RepairSpan], hyp: &[RepairSpan], hit: &mut [bool], check_et: bool) -> BTreeSet<usize> {
    let mut used = BTreeSet::new();
    for grp in contiguous_groups(gold).into_iter().filter(|g| g.len() > 1) {
        let union: BTreeSet<usize> = grp.iter().flat_map(|&k| gold[k].removed.iter().copied()).collect();
        let last = &gold[*grp.last().unwrap()];
        let found = hyp.iter().position(|h| {
            h.onset == last.onset
                && h.removed.iter().copied().collect::<BTreeSet<_>>() == union
                && (!check_et || h.editing_term == last.editing_term)
        });
        if let Some(h) = found {
            used.insert(h);
            for &k in &grp {
                hit[k] = true;
            }
        }
    }
    used
}

fn tally(gold_hit: &[bool], hyp_used: &BTreeSet<usize>, n_hyp: usize) -> ConfusionCounts {
    let hits = gold_hit.iter().filter(|&&h| h).count() as u64;
    ConfusionCounts::new(hits, gold_hit.len() as u64 - hits, (n_hyp - hyp_used.len()) as u64)
}

/// Repair detection counts for one turn.
pub fn score_repairs(gold: &[RepairSpan], hyp: &[RepairSpan], mode: RepairMode) -> ConfusionCounts {
    let mut hit = vec![false; gold.len()];
    let mut used = group_hits(gold, hyp, &mut hit, false);
    for (k, g) in gold.iter().enumerate() {
        let Some(h) = hyp.iter().position(|h| h.onset == g.onset) else { continue };
        let hr = &hyp[h];
        let ok = match mode {
            RepairMode::All => true,
            RepairMode::Exact => {
                hr.tag == g.tag
                    || (g.ambiguous && matches!(hr.tag, RepairTag::Mod | RepairTag::Can))
                    || g.corrected_by(hr)
                    || (g.tag == RepairTag::Abr && hr.tag == RepairTag::Mod && hr.removed.is_empty())
            }
        };
        if ok {
            hit[k] = true;
            used.insert(h);
        }
    }
    tally(&hit, &used, hyp.len())
}

/// Correction counts: removed speech and editing term must both match.
pub fn score_corrections(gold: &[RepairSpan], hyp: &[RepairSpan]) -> ConfusionCounts {
    let mut hit = vec![false; gold.len()];
    let mut used = group_hits(gold, hyp, &mut hit, true);
    for (k, g) in gold.iter().enumerate() {
        if let Some(h) = hyp.iter().position(|h| h.onset == g.onset && g.corrected_by(h)) {
            hit[k] = true;
            used.insert(h);
        }
    }
    tally(&hit, &used, hyp.len())
}

/// Accumulated evaluation results; counts are summed before rates are taken.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub turns: u64,
    pub pos: PosScore,
    pub pos_ignore_dm: PosScore,
    pub dm: ConfusionCounts,
    pub tones: ToneScores,
    pub repairs_all: ConfusionCounts,
    pub repairs_exact: ConfusionCounts,
    pub corrections: ConfusionCounts,
    pub word_perplexity: PerplexityAccumulator,
    pub branching_perplexity: PerplexityAccumulator,
}

impl Metrics {
    pub fn merge(&mut self, o: &Metrics) {
        self.turns += o.turns;
        self.pos.add(&o.pos);
        self.pos_ignore_dm.add(&o.pos_ignore_dm);
        self.dm.add(&o.dm);
        self.tones.add(&o.tones);
        self.repairs_all.add(&o.repairs_all);
        self.repairs_exact.add(&o.repairs_exact);
        self.corrections.add(&o.corrections);
        self.word_perplexity.merge(&o.word_perplexity);
        self.branching_perplexity.merge(&o.branching_perplexity);
    }

    /// Flat `key = value` block; undefined rates print as `na`.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let fmt = |v: Option<f64>| v.map_or_else(|| "na".to_string(), |x| format!("{x:.6}"));
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("turns", self.turns.to_string());
        line("word_perplexity", fmt(self.word_perplexity.perplexity()));
        line("branching_perplexity", fmt(self.branching_perplexity.perplexity()));
        line("pos_errors", self.pos.errors.to_string());
        line("pos_error_rate", fmt(self.pos.error_rate()));
        line("pos_error_rate_ignore_dm", fmt(self.pos_ignore_dm.error_rate()));
        let groups: [(&str, &ConfusionCounts); 7] = [
            ("dm", &self.dm),
            ("tones_within_turn", &self.tones.within),
            ("tones_end_of_turn", &self.tones.end),
            ("tones_all", &self.tones.all),
            ("repairs_all", &self.repairs_all),
            ("repairs_exact", &self.repairs_exact),
            ("corrections", &self.corrections),
        ];
        for (name, c) in groups {
            line(&format!("{name}_hits"), c.hits.to_string());
            line(&format!("{name}_misses"), c.misses.to_string());
            line(&format!("{name}_false_positives"), c.false_positives.to_string());
            line(&format!("{name}_recall"), fmt(c.recall()));
            line(&format!("{name}_precision"), fmt(c.precision()));
            line(&format!("{name}_error"), fmt(c.error()));
        }
        out
    }
}
