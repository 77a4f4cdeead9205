//! Grammar-driven generator of annotated dialogs for desk-scale runs.
//!
//! Turns are sequences of short task-oriented clauses. Repairs repeat or
//! replace the last words of a clause, optionally with an editing term in
//! between; abridged repairs have an editing term only. Every repair is
//! annotated with its correspondences.

use crate::corpus::{Corpus, Dialog, Label, RepairKind, Token, Turn};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub turns: usize,
    /// Number of content words (nouns, names, verbs) to draw from.
    pub vocab: usize,
    /// Chance that a clause contains a repair.
    pub repair_rate: f64,
    /// Chance that a clause ends with a boundary tone.
    pub tone_rate: f64,
    /// Chance that a repair has an editing term.
    pub et_rate: f64,
    /// Share of repairs that replace rather than repeat the last word.
    pub replacement_share: f64,
    /// Share of repairs that are abridged.
    pub abridged_share: f64,
    pub turns_per_dialog: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            turns: 100,
            vocab: 40,
            repair_rate: 0.1,
            tone_rate: 0.8,
            et_rate: 0.4,
            replacement_share: 0.3,
            abridged_share: 0.1,
            turns_per_dialog: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Rate { name: &'static str, value: f64 },
    #[error("{0} must be positive")]
    Zero(&'static str),
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, value) in [
            ("repair_rate", self.repair_rate),
            ("tone_rate", self.tone_rate),
            ("et_rate", self.et_rate),
            ("replacement_share", self.replacement_share),
            ("abridged_share", self.abridged_share),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::Rate { name, value });
            }
        }
        if self.vocab == 0 {
            return Err(SynthError::Zero("vocab"));
        }
        if self.turns_per_dialog == 0 {
            return Err(SynthError::Zero("turns_per_dialog"));
        }
        Ok(())
    }
}

const NOUNS: &[&str] = &["engine", "boxcar", "tanker", "train", "car", "load", "route", "track"];
const NAMES: &[&str] = &["avon", "bath", "corning", "dansville", "elmira"];
const VERBS: &[&str] = &["take", "send", "move", "get", "use", "hook"];
const NUMBERS: &[&str] = &["one", "two", "three", "four"];
const PLURALS: &[&str] = &["oranges", "bananas", "boxcars", "tankers"];

/// Editing terms with their POS tags.
const EDITING_TERMS: &[(&[(&str, &str)], f64)] = &[
    (&[("um", "UH_FP")], 303.0),
    (&[("uh", "UH_FP")], 261.0),
    (&[("okay", "AC")], 64.0),
    (&[("oh", "UH_D")], 44.0),
    (&[("well", "UH_D")], 33.0),
    (&[("no", "UH_D")], 31.0),
    (&[("I", "PRP"), ("mean", "VBP")], 10.0),
    (&[("er", "UH_FP")], 9.0),
];

/// Lexicon split into word classes, with Zipf-like weights.
struct Lexicon {
    nouns: Vec<String>,
    names: Vec<String>,
    verbs: Vec<String>,
}

fn extend(base: &[&str], n: usize) -> Vec<String> {
    let n = n.max(1);
    (0..n)
        .map(|k| {
            let w = base[k % base.len()];
            if k < base.len() {
                w.to_string()
            } else {
                format!("{w}{}", k / base.len() + 1)
            }
        })
        .collect()
}

impl Lexicon {
    fn new(vocab: usize) -> Self {
        let nouns = vocab * 2 / 5;
        let names = vocab * 3 / 10;
        let verbs = vocab - nouns - names;
        Lexicon { nouns: extend(NOUNS, nouns), names: extend(NAMES, names), verbs: extend(VERBS, verbs) }
    }
}

fn zipf(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    let weights: Vec<f64> = (0..words.len()).map(|k| 1.0 / (k + 1) as f64).collect();
    let dist = WeightedIndex::new(&weights).expect("non-empty word class");
    words[dist.sample(rng)].clone()
}

fn pick(rng: &mut ChaCha8Rng, words: &[&str]) -> String {
    words.choose(rng).expect("non-empty word class").to_string()
}

/// One clause as `(word, POS)` pairs.
fn clause(rng: &mut ChaCha8Rng, lex: &Lexicon) -> Vec<(String, String)> {
    let w = |s: &str, p: &str| (s.to_string(), p.to_string());
    let mut out = Vec::new();
    if rng.gen_bool(0.15) {
        out.push(match rng.gen_range(0..3) {
            0 => w("okay", "AC"),
            1 => w("so", "CC_D"),
            _ => w("now", "RB_D"),
        });
    }
    match rng.gen_range(0..5) {
        0 => {
            out.push(w(if rng.gen_bool(0.5) { "we" } else { "I" }, "PRP"));
            out.push(w(if rng.gen_bool(0.5) { "could" } else { "will" }, "MD"));
            out.push((zipf(rng, &lex.verbs), "VB".into()));
            out.push(w("the", "DT"));
            out.push((zipf(rng, &lex.nouns), "NN".into()));
            out.push(w("to", "PREP"));
            out.push((zipf(rng, &lex.names), "NNP".into()));
        }
        1 => {
            out.push(w("I", "PRP"));
            out.push(w("need", "VBP"));
            out.push(w("a", "DT"));
            out.push((zipf(rng, &lex.nouns), "NN".into()));
        }
        2 => {
            out.push((zipf(rng, &lex.verbs), "VB".into()));
            out.push(w("the", "DT"));
            out.push((zipf(rng, &lex.nouns), "NN".into()));
            out.push(w(if rng.gen_bool(0.5) { "to" } else { "from" }, "PREP"));
            out.push((zipf(rng, &lex.names), "NNP".into()));
        }
        3 => {
            out.push(w("the", "DT"));
            out.push((zipf(rng, &lex.nouns), "NN".into()));
            out.push(w("is", "BEZ"));
            out.push(w("at", "PREP"));
            out.push((zipf(rng, &lex.names), "NNP".into()));
        }
        _ => {
            out.push(w("we", "PRP"));
            out.push(w("could", "MD"));
            out.push((zipf(rng, &lex.verbs), "VB".into()));
            out.push((pick(rng, NUMBERS), "CD".into()));
            out.push((pick(rng, PLURALS), "NNS".into()));
        }
    }
    out
}

struct Builder<'a> {
    rng: &'a mut ChaCha8Rng,
    turn: Turn,
    next_index: u32,
}

impl Builder<'_> {
    fn gap(&mut self, lo: f64, hi: f64) -> Option<f64> {
        let v: f64 = self.rng.gen_range(lo..hi);
        Some((v * 100.0).round() / 100.0)
    }

    fn push(&mut self, word: &str, pos: &str, labels: Vec<Label>) {
        let tok = Token::new(word, pos).with_labels(labels);
        let s = self.gap(0.0, 0.12);
        self.turn.push(tok, s);
    }

    fn label_last(&mut self, label: Label) {
        let tok = self.turn.tokens.last_mut().expect("a word precedes every label");
        let mut labels = std::mem::take(&mut tok.labels);
        labels.push(label);
        *tok = tok.clone().with_labels(labels);
    }

    fn set_last_gap(&mut self, lo: f64, hi: f64) {
        let s = self.gap(lo, hi);
        *self.turn.silences.last_mut().expect("a word precedes every gap") = s;
    }

    fn editing_term(&mut self) {
        let weights: Vec<f64> = EDITING_TERMS.iter().map(|(_, w)| *w).collect();
        let dist = WeightedIndex::new(&weights).expect("editing terms");
        let (words, _) = EDITING_TERMS[dist.sample(self.rng)];
        for (w, p) in words {
            self.push(w, p, vec![Label::Et]);
        }
        self.set_last_gap(0.1, 0.5);
    }

    /// Emits the clause, possibly with one repair after word `k`.
    fn clause(&mut self, words: &[(String, String)], p: &SynthParams, lex: &Lexicon) {
        let repair_at = (words.len() >= 2 && self.rng.gen_bool(p.repair_rate)).then(|| self.rng.gen_range(1..words.len()));
        let Some(k) = repair_at else {
            for (w, pos) in words {
                self.push(w, pos, Vec::new());
            }
            return;
        };
        let idx = self.next_index;
        self.next_index += 10;
        let roll: f64 = self.rng.gen();
        if roll < p.abridged_share {
            for (w, pos) in &words[..k] {
                self.push(w, pos, Vec::new());
            }
            self.label_last(Label::Ip { index: idx, kind: Some(RepairKind::Abr) });
            self.set_last_gap(0.2, 0.6);
            self.editing_term();
            for (w, pos) in &words[k..] {
                self.push(w, pos, Vec::new());
            }
            return;
        }
        let len = if k >= 2 && self.rng.gen_bool(0.4) { 2 } else { 1 };
        let start = k - len;
        let (last_word, last_pos) = &words[k - 1];
        let other = (roll < p.abridged_share + p.replacement_share)
            .then(|| replacement(self.rng, last_word, last_pos, lex))
            .filter(|w| w != last_word);
        let replace = other.is_some();
        for (w, pos) in &words[..start] {
            self.push(w, pos, Vec::new());
        }
        for (j, (w, pos)) in words[start..k].iter().enumerate() {
            let co = idx + 1 + j as u32;
            let last = j + 1 == len;
            let label = if last && replace { Label::Replace(co) } else { Label::Match(co) };
            self.push(w, pos, vec![label]);
        }
        self.label_last(Label::Ip { index: idx, kind: Some(RepairKind::Mod) });
        self.set_last_gap(0.2, 0.6);
        if self.rng.gen_bool(p.et_rate) {
            self.editing_term();
        }
        for (j, (w, pos)) in words[start..k].iter().enumerate() {
            let co = idx + 1 + j as u32;
            if let (true, Some(other)) = (j + 1 == len, &other) {
                self.push(other, pos, vec![Label::Replace(co)]);
            } else {
                self.push(w, pos, vec![Label::Match(co)]);
            }
        }
        for (w, pos) in &words[k..] {
            self.push(w, pos, Vec::new());
        }
    }
}

/// A different word of the same class.
fn replacement(rng: &mut ChaCha8Rng, word: &str, pos: &str, lex: &Lexicon) -> String {
    let pool: Vec<String> = match pos {
        "NN" => lex.nouns.clone(),
        "NNP" => lex.names.clone(),
        "VB" => lex.verbs.clone(),
        "CD" => NUMBERS.iter().map(|s| s.to_string()).collect(),
        "NNS" => PLURALS.iter().map(|s| s.to_string()).collect(),
        "PRP" => vec!["we".into(), "I".into(), "you".into()],
        "MD" => vec!["could".into(), "will".into(), "can".into()],
        "DT" => vec!["the".into(), "a".into(), "that".into()],
        "PREP" => vec!["to".into(), "from".into(), "at".into()],
        "VBP" => vec!["need".into(), "want".into()],
        "BEZ" => vec!["is".into()],
        _ => vec![],
    };
    let others: Vec<&String> = pool.iter().filter(|w| *w != word).collect();
    others.choose(rng).map_or_else(|| word.to_string(), |w| w.to_string())
}

/// Generates a corpus; identical parameters give identical corpora.
pub fn generate(params: &SynthParams) -> Result<Corpus, SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let lex = Lexicon::new(params.vocab);
    let mut corpus = Corpus::default();
    for t in 0..params.turns {
        if t % params.turns_per_dialog == 0 {
            corpus.dialogs.push(Dialog { id: format!("syn{}", t / params.turns_per_dialog + 1), turns: Vec::new() });
        }
        let speaker = if t % 2 == 0 { "u" } else { "s" };
        let mut b = Builder { rng: &mut rng, turn: Turn::new(speaker, format!("utt{}", t % params.turns_per_dialog + 1)), next_index: 10 };
        let clauses = b.rng.gen_range(1..=3);
        for c in 0..clauses {
            let words = clause(b.rng, &lex);
            b.clause(&words, params, &lex);
            if b.rng.gen_bool(params.tone_rate) {
                b.label_last(Label::Tone);
                b.set_last_gap(0.3, 1.2);
            } else if c + 1 < clauses {
                b.set_last_gap(0.0, 0.3);
            }
        }
        *b.turn.silences.last_mut().expect("non-empty turn") = None;
        let turn = b.turn;
        corpus.dialogs.last_mut().expect("dialog opened above").turns.push(turn);
    }
    Ok(corpus)
}
