//! Test doubles and oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod worked;

use dialm_core::corpus::GoldTag;
use dialm_core::lm::{EtState, LicensorView, LmConfig, OnsetView, ProbSource, State};
use dialm_core::silence::SilenceTable;
use dialm_core::tags::{Corr, EditTag, RepairTag, ToneTag};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

type LicensedPath = (State, GoldTag, f64, Option<(usize, Corr)>);

/// Deterministic pseudo-random conditional distributions: every value is a
/// hash of the variable and the features it may depend on.
#[derive(Debug, Clone)]
pub struct HashedSource {
    pub seed: u64,
    pub tags: Vec<String>,
    /// Words each tag can produce.
    pub vocab: Vec<Vec<String>>,
    pub table: Option<SilenceTable>,
}

fn state_key(st: &State, h: &mut DefaultHasher) {
    st.ctx.hash(h);
    st.et_state.hash(h);
    st.et_prev.hash(h);
    st.position.hash(h);
}

impl HashedSource {
    /// `n_tags` tags with two or three words each; some words are shared.
    pub fn random(rng: &mut ChaCha8Rng, n_tags: usize) -> Self {
        let pool = ["a", "b", "c", "d", "e", "f", "g"];
        let tags: Vec<String> = (0..n_tags).map(|i| format!("T{i}")).collect();
        let vocab = (0..n_tags)
            .map(|_| {
                let k = rng.gen_range(2..=3);
                let mut ws: Vec<String> = pool.choose_multiple(rng, k).map(|s| s.to_string()).collect();
                ws.sort();
                ws
            })
            .collect();
        HashedSource { seed: rng.gen(), tags, vocab, table: None }
    }

    pub fn words(&self) -> Vec<String> {
        let mut all: Vec<String> = self.vocab.iter().flatten().cloned().collect();
        all.sort();
        all.dedup();
        all
    }

    fn value(&self, f: impl FnOnce(&mut DefaultHasher)) -> f64 {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        f(&mut h);
        0.05 + (h.finish() % 10_000) as f64 / 10_000.0
    }
}

impl ProbSource for HashedSource {
    fn pos_tags(&self) -> &[String] {
        &self.tags
    }

    fn tone(&self, st: &State) -> [f64; 2] {
        let v = |k: u8| {
            self.value(|h| {
                ("T", k).hash(h);
                state_key(st, h)
            })
        };
        [v(0), v(1)]
    }

    fn edit(&self, st: &State, t: ToneTag) -> [f64; 4] {
        let v = |k: u8| {
            self.value(|h| {
                ("E", k, t).hash(h);
                state_key(st, h)
            })
        };
        [v(0), v(1), v(2), v(3)]
    }

    fn repair(&self, st: &State, t: ToneTag, e: EditTag) -> [f64; 4] {
        let v = |k: u8| {
            self.value(|h| {
                ("R", k, t, e).hash(h);
                state_key(st, h)
            })
        };
        [v(0), v(1), v(2), v(3)]
    }

    fn onset(&self, st: &State, view: &OnsetView<'_>) -> f64 {
        self.value(|h| {
            ("O", view.r, view.position, view.len, view.onset_pos, view.tones, view.dms, view.fps, view.prev).hash(h);
            view.prior.hash(h);
            state_key(st, h)
        })
    }

    fn licensor(&self, st: &State, view: &LicensorView) -> f64 {
        self.value(|h| {
            ("L", &view.licensor_pos, &view.licensor_word, view.len, view.rlen, view.rrest, view.rep_x).hash(h);
            state_key(st, h)
        })
    }

    fn correspondence(&self, st: &State, view: &LicensorView) -> [f64; 3] {
        let v = |k: u8| {
            self.value(|h| {
                ("C", k, &view.licensor_word, view.prev_c, view.alen).hash(h);
                state_key(st, h)
            })
        };
        [v(0), v(1), v(2)]
    }

    fn pos(&self, st: &State) -> Vec<f64> {
        (0..self.tags.len())
            .map(|k| {
                self.value(|h| {
                    ("P", k).hash(h);
                    state_key(st, h)
                })
            })
            .collect()
    }

    fn word(&self, st: &State, pos: usize, word: &str) -> f64 {
        let ws = &self.vocab[pos];
        if !ws.iter().any(|w| w == word) {
            return 0.0;
        }
        let raw = |w: &str| {
            self.value(|h| {
                ("W", pos, w).hash(h);
                state_key(st, h)
            })
        };
        raw(word) / ws.iter().map(|w| raw(w)).sum::<f64>()
    }

    fn allowed_pos(&self, _word: &str) -> Option<Vec<usize>> {
        None
    }

    fn silence(&self) -> Option<&SilenceTable> {
        self.table.as_ref()
    }
}

/// Random turn over the source's vocabulary.
pub fn random_words(rng: &mut ChaCha8Rng, src: &HashedSource, n: usize) -> Vec<String> {
    let words = src.words();
    (0..n).map(|_| words.choose(rng).unwrap().clone()).collect()
}

pub fn random_config(rng: &mut ChaCha8Rng) -> LmConfig {
    let mut cfg = match rng.gen_range(0..4) {
        0 => LmConfig::pos_only(),
        1 => LmConfig { tones: true, ..LmConfig::pos_only() },
        2 => LmConfig { tones: rng.gen(), repairs: true, ..LmConfig::pos_only() },
        _ => LmConfig { tones: rng.gen(), repairs: true, correction: true, ..LmConfig::pos_only() },
    };
    cfg.collapse_repairs = cfg.repairs && rng.gen_bool(0.3);
    cfg.beam = usize::MAX;
    cfg
}

/// One complete path found by the enumerator.
#[derive(Debug, Clone)]
pub struct Path {
    pub tags: Vec<GoldTag>,
    pub pos: Vec<usize>,
    /// Probability of each word with its tags.
    pub probs: Vec<f64>,
}

impl Path {
    pub fn prob(&self) -> f64 {
        self.probs.iter().product()
    }
}

/// Every path, and the total probability of all prefixes of each length.
pub struct Enumeration {
    pub paths: Vec<Path>,
    pub prefix_mass: Vec<f64>,
}

fn norm(values: &[f64]) -> Vec<f64> {
    let z: f64 = values.iter().sum();
    values.iter().map(|v| v / z).collect()
}

/// Legal (E, R) pairs written out from the dependency rules.
fn legal(cfg: &LmConfig, st: &State) -> Vec<(EditTag, RepairTag)> {
    let mut out = Vec::new();
    for e in EditTag::ALL {
        for r in RepairTag::ALL {
            let pair_ok = match e {
                EditTag::Pop => matches!(r, RepairTag::Mod | RepairTag::Can | RepairTag::Abr),
                EditTag::Et | EditTag::Push => r == RepairTag::Null,
                EditTag::Null => matches!(r, RepairTag::Null | RepairTag::Mod | RepairTag::Can),
            };
            let in_et = st.et_state != EtState::Null;
            let state_ok = match e {
                EditTag::Et | EditTag::Pop => in_et,
                EditTag::Push => !in_et,
                EditTag::Null => !in_et,
            };
            let can_ok = !(cfg.collapse_repairs && r == RepairTag::Can);
            let has_words = !(r.has_onset() && st.current.is_empty());
            if pair_ok && state_ok && can_ok && has_words {
                out.push((e, r));
            }
        }
    }
    out
}

/// One-word continuations: state, tags, POS and probability.
pub fn step(src: &dyn ProbSource, cfg: &LmConfig, st: &State, word: &str) -> Vec<(State, GoldTag, usize, f64)> {
    let mut out = Vec::new();
    let tones: Vec<(ToneTag, f64)> = if cfg.tones && st.position > 0 {
        let d = norm(&src.tone(st));
        vec![(ToneTag::Null, d[0]), (ToneTag::Tone, d[1])]
    } else {
        vec![(ToneTag::Null, 1.0)]
    };
    for (t, pt) in tones {
        let mut ters: Vec<(EditTag, RepairTag, f64)> = Vec::new();
        if cfg.repairs {
            let pairs = legal(cfg, st);
            let raw_e = src.edit(st, t);
            let ze: f64 = EditTag::ALL.iter().filter(|e| pairs.iter().any(|p| p.0 == **e)).map(|e| raw_e[e.index()]).sum();
            for &(e, r) in &pairs {
                let raw_r = src.repair(st, t, e);
                let zr: f64 = pairs.iter().filter(|p| p.0 == e).map(|p| raw_r[p.1.index()]).sum();
                ters.push((e, r, raw_e[e.index()] / ze * raw_r[r.index()] / zr));
            }
        } else {
            ters.push((EditTag::Null, RepairTag::Null, 1.0));
        }
        for (e, r, per) in ters {
            let mut s1 = st.clone();
            s1.apply_ter(t, e, r);
            let base = GoldTag { t, e, r, ..GoldTag::default() };
            let mut onsets: Vec<(State, GoldTag, f64)> = Vec::new();
            if r.has_onset() && cfg.correction {
                let n = s1.current.len();
                let scores: Vec<f64> = (0..n).map(|k| src.onset(&s1, &s1.onset_view(r, k))).collect();
                for (k, po) in norm(&scores).into_iter().enumerate() {
                    let mut s2 = s1.clone();
                    let o = s1.current[k];
                    s2.apply_onset(r, k);
                    onsets.push((s2, GoldTag { o: Some(o), ..base }, po));
                }
            } else {
                if r.has_onset() {
                    s1.apply_marker(r);
                }
                onsets.push((s1, base, 1.0));
            }
            for (s2, tags, po) in onsets {
                let mut lic: Vec<LicensedPath> = Vec::new();
                let in_et = matches!(e, EditTag::Push | EditTag::Et);
                if cfg.correction && !in_et && s2.active().is_some() {
                    let views = s2.licensor_views();
                    let pl = norm(&views.iter().map(|v| src.licensor(&s2, v)).collect::<Vec<_>>());
                    for (l, v) in views.iter().enumerate() {
                        let pc = norm(&src.correspondence(&s2, v));
                        for c in Corr::ALL {
                            if c == Corr::M && &*v.licensor_word != word {
                                continue;
                            }
                            let forced = match c {
                                Corr::X => None,
                                _ => Some((src.pos_tags().iter().position(|p| **p == *v.licensor_pos).unwrap(), c)),
                            };
                            let mut s3 = s2.clone();
                            s3.apply_licensor(l + 1, c);
                            let t3 = GoldTag { l: Some(l as u8 + 1), c: Some(c), ..tags };
                            lic.push((s3, t3, pl[l] * pc[c.index()], forced));
                        }
                    }
                } else {
                    lic.push((s2, tags, 1.0, None));
                }
                for (s3, tags, plc, forced) in lic {
                    let pd = norm(&src.pos(&s3));
                    for p in 0..src.pos_tags().len() {
                        let pp = match forced {
                            Some((f, _)) => f64::from(u8::from(f == p)),
                            None => pd[p],
                        };
                        let pw = match forced {
                            Some((_, Corr::M)) => 1.0,
                            _ => src.word(&s3, p, word),
                        };
                        let prob = pt * per * po * plc * pp * pw;
                        if prob > 0.0 {
                            let mut s4 = s3.clone();
                            s4.push_word(e, &src.pos_tags()[p], word);
                            out.push((s4, tags, p, prob));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Exhaustive search over every interpretation of `words`.
pub fn enumerate(src: &dyn ProbSource, cfg: &LmConfig, words: &[String]) -> Enumeration {
    let mut en = Enumeration { paths: Vec::new(), prefix_mass: vec![0.0; words.len()] };
    let start = Path { tags: Vec::new(), pos: Vec::new(), probs: Vec::new() };
    dfs(src, cfg, words, State::new(), start, 1.0, &mut en);
    en
}

fn dfs(src: &dyn ProbSource, cfg: &LmConfig, words: &[String], st: State, path: Path, mass: f64, en: &mut Enumeration) {
    let i = path.tags.len();
    if i == words.len() {
        en.paths.push(path);
        return;
    }
    for (s, tags, pos, p) in step(src, cfg, &st, &words[i]) {
        en.prefix_mass[i] += mass * p;
        let mut next = path.clone();
        next.tags.push(tags);
        next.pos.push(pos);
        next.probs.push(p);
        dfs(src, cfg, words, s, next, mass * p, en);
    }
}

/// Scripted distributions for chosen turn positions; positions without a
/// script get uniform scores and word probability 1.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    pub tags: Vec<String>,
    pub rows: std::collections::HashMap<usize, Row>,
    pub table: Option<SilenceTable>,
}

/// Raw scores for the word at one position. Onset scores are keyed by
/// candidate position, licensor scores by candidate word; unlisted
/// candidates share what is left of 1.
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub tone: Option<[f64; 2]>,
    pub edit: Option<[f64; 4]>,
    pub repair: Option<[f64; 4]>,
    pub onset: Vec<(usize, f64)>,
    pub licensor: Vec<(&'static str, f64)>,
    pub corr: Option<[f64; 3]>,
    pub pos: Vec<(&'static str, f64)>,
    pub word: Option<f64>,
}

/// `v` at index `i`, `1 - v` at index `j`.
pub fn pair<const N: usize>(i: usize, v: f64, j: usize) -> [f64; N] {
    let mut out = [0.0; N];
    out[i] = v;
    out[j] = 1.0 - v;
    out
}

fn spread<K: PartialEq + ?Sized, Q: std::borrow::Borrow<K>>(listed: &[(Q, f64)], key: &K, n: usize) -> f64 {
    if let Some((_, v)) = listed.iter().find(|(k, _)| k.borrow() == key) {
        return *v;
    }
    let used: f64 = listed.iter().map(|(_, v)| v).sum();
    let rest = n.saturating_sub(listed.len()).max(1);
    ((1.0 - used) / rest as f64).max(0.0)
}

impl ScriptedSource {
    pub fn new(tags: Vec<String>) -> Self {
        ScriptedSource { tags, ..Default::default() }
    }

    fn row(&self, st: &State) -> Option<&Row> {
        self.rows.get(&st.position)
    }
}

impl ProbSource for ScriptedSource {
    fn pos_tags(&self) -> &[String] {
        &self.tags
    }

    fn tone(&self, st: &State) -> [f64; 2] {
        self.row(st).and_then(|r| r.tone).unwrap_or([1.0; 2])
    }

    fn edit(&self, st: &State, _: ToneTag) -> [f64; 4] {
        self.row(st).and_then(|r| r.edit).unwrap_or([1.0; 4])
    }

    fn repair(&self, st: &State, _: ToneTag, _: EditTag) -> [f64; 4] {
        self.row(st).and_then(|r| r.repair).unwrap_or([1.0; 4])
    }

    fn onset(&self, st: &State, view: &OnsetView<'_>) -> f64 {
        match self.row(st) {
            Some(r) if !r.onset.is_empty() => {
                spread(&r.onset, &view.position, st.onset_candidates().len())
            }
            _ => 1.0,
        }
    }

    fn licensor(&self, st: &State, view: &LicensorView) -> f64 {
        match self.row(st) {
            Some(r) if !r.licensor.is_empty() => spread::<str, _>(&r.licensor, &view.licensor_word, st.licensor_views().len()),
            _ => 1.0,
        }
    }

    fn correspondence(&self, st: &State, _: &LicensorView) -> [f64; 3] {
        self.row(st).and_then(|r| r.corr).unwrap_or([1.0; 3])
    }

    fn pos(&self, st: &State) -> Vec<f64> {
        match self.row(st) {
            Some(r) if !r.pos.is_empty() => self.tags.iter().map(|t| spread::<str, _>(&r.pos, t, self.tags.len())).collect(),
            _ => vec![1.0; self.tags.len()],
        }
    }

    fn word(&self, st: &State, _: usize, _: &str) -> f64 {
        self.row(st).and_then(|r| r.word).unwrap_or(1.0)
    }

    fn allowed_pos(&self, _: &str) -> Option<Vec<usize>> {
        None
    }

    fn silence(&self) -> Option<&SilenceTable> {
        self.table.as_ref()
    }
}
