use super::state::State;
use super::{normalize, LmConfig, LmError, ProbSource};
use crate::corpus::GoldTag;
use crate::eval::RepairSpan;
use crate::silence::{classify_transition, gap_before, TransitionClass};
use crate::tags::{Corr, EditTag, RepairTag, ToneTag};
use serde::{Deserialize, Serialize};

/// A hypothesis after licensing, with the correspondence it commits to.
type Licensed = (State, GoldTag, Factors, Option<(usize, Corr)>);

/// Probability contributed by each variable for one word; variables that
/// were not predicted contribute 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub t: f64,
    pub e: f64,
    pub r: f64,
    /// Joint (T, E, R) probability after any silence adjustment.
    pub ter: f64,
    pub o: f64,
    pub l: f64,
    pub c: f64,
    pub p: f64,
    pub w: f64,
}

impl Default for Factors {
    fn default() -> Self {
        Factors { t: 1.0, e: 1.0, r: 1.0, ter: 1.0, o: 1.0, l: 1.0, c: 1.0, p: 1.0, w: 1.0 }
    }
}

impl Factors {
    pub fn product(&self) -> f64 {
        self.ter * self.o * self.l * self.c * self.p * self.w
    }
}

/// One way of continuing a hypothesis by the next word.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub state: State,
    pub tags: GoldTag,
    pub pos: usize,
    pub factors: Factors,
}

struct Ter {
    t: ToneTag,
    e: EditTag,
    r: RepairTag,
    f: Factors,
}

fn ter_options(src: &dyn ProbSource, cfg: &LmConfig, st: &State, gap: Option<f64>) -> Vec<Ter> {
    let mut out = Vec::new();
    let tones: Vec<(ToneTag, f64)> = if cfg.tones && st.position > 0 {
        let d = normalize(&src.tone(st)).unwrap_or_else(|| vec![1.0, 0.0]);
        ToneTag::ALL.iter().map(|&t| (t, d[t.index()])).collect()
    } else {
        vec![(ToneTag::Null, 1.0)]
    };
    for (t, pt) in tones {
        if pt == 0.0 {
            continue;
        }
        if !cfg.repairs {
            out.push(Ter { t, e: EditTag::Null, r: RepairTag::Null, f: Factors { t: pt, ..Factors::default() } });
            continue;
        }
        let pairs: Vec<_> = st
            .legal_er()
            .into_iter()
            .filter(|&(_, r)| !(cfg.collapse_repairs && r == RepairTag::Can))
            .filter(|&(_, r)| !(r.has_onset() && st.onset_candidates().is_empty()))
            .collect();
        let mut edits: Vec<EditTag> = pairs.iter().map(|p| p.0).collect();
        edits.dedup();
        let raw_e = src.edit(st, t);
        let Some(pe) = normalize(&edits.iter().map(|e| raw_e[e.index()]).collect::<Vec<_>>()) else { continue };
        for (ei, &e) in edits.iter().enumerate() {
            if pe[ei] == 0.0 {
                continue;
            }
            let repairs: Vec<RepairTag> = pairs.iter().filter(|p| p.0 == e).map(|p| p.1).collect();
            let raw_r = src.repair(st, t, e);
            let Some(pr) = normalize(&repairs.iter().map(|r| raw_r[r.index()]).collect::<Vec<_>>()) else { continue };
            for (ri, &r) in repairs.iter().enumerate() {
                if pr[ri] > 0.0 {
                    out.push(Ter { t, e, r, f: Factors { t: pt, e: pe[ei], r: pr[ri], ..Factors::default() } });
                }
            }
        }
    }
    let joint: Vec<f64> = out.iter().map(|o| o.f.t * o.f.e * o.f.r).collect();
    let adjusted = match (cfg.silence, src.silence(), gap) {
        (true, Some(table), Some(d)) => {
            let classes: Vec<(TransitionClass, f64)> =
                out.iter().zip(&joint).map(|(o, &p)| (classify_transition(o.t, o.e, o.r), p)).collect();
            table.adjust(&classes, d)
        }
        _ => joint,
    };
    for (o, p) in out.iter_mut().zip(adjusted) {
        o.f.ter = p;
    }
    out.retain(|o| o.f.ter > 0.0);
    out
}

/// Every continuation of `st` by `word`, with its per-variable factors.
/// Zero-probability continuations are left out.
pub fn expand(src: &dyn ProbSource, cfg: &LmConfig, st: &State, word: &str, gap: Option<f64>) -> Vec<Expansion> {
    let mut out = Vec::new();
    for ter in ter_options(src, cfg, st, gap) {
        let mut s1 = st.clone();
        s1.apply_ter(ter.t, ter.e, ter.r);
        let tags = GoldTag { t: ter.t, e: ter.e, r: ter.r, ..GoldTag::default() };
        let mut after_onset: Vec<(State, GoldTag, Factors)> = Vec::new();
        if ter.r.has_onset() {
            if cfg.correction {
                let n = s1.onset_candidates().len();
                let scores: Vec<f64> = (0..n).map(|k| src.onset(&s1, &s1.onset_view(ter.r, k))).collect();
                let Some(po) = normalize(&scores) else { continue };
                for (k, p) in po.into_iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let mut s2 = s1.clone();
                    let position = s1.onset_candidates()[k];
                    s2.apply_onset(ter.r, k);
                    after_onset.push((s2, GoldTag { o: Some(position), ..tags }, Factors { o: p, ..ter.f }));
                }
            } else {
                s1.apply_marker(ter.r);
                after_onset.push((s1, tags, ter.f));
            }
        } else {
            after_onset.push((s1, tags, ter.f));
        }

        for (s2, tags, f) in after_onset {
            let mut licensed: Vec<Licensed> = Vec::new();
            let in_et = matches!(tags.e, EditTag::Push | EditTag::Et);
            if cfg.correction && !in_et && s2.active().is_some() {
                let views = s2.licensor_views();
                let scores: Vec<f64> = views.iter().map(|v| src.licensor(&s2, v)).collect();
                let Some(pl) = normalize(&scores) else { continue };
                for (l, view) in views.iter().enumerate() {
                    if pl[l] == 0.0 {
                        continue;
                    }
                    let Some(pc) = normalize(&src.correspondence(&s2, view)) else { continue };
                    for c in Corr::ALL {
                        if pc[c.index()] == 0.0 || (c == Corr::M && &*view.licensor_word != word) {
                            continue;
                        }
                        let forced = match c {
                            Corr::M | Corr::R => {
                                match src.pos_tags().iter().position(|p| **p == *view.licensor_pos) {
                                    Some(i) => Some((i, c)),
                                    None => continue,
                                }
                            }
                            Corr::X => None,
                        };
                        let mut s3 = s2.clone();
                        s3.apply_licensor(l + 1, c);
                        let t = GoldTag { l: Some((l + 1) as u8), c: Some(c), ..tags };
                        licensed.push((s3, t, Factors { l: pl[l], c: pc[c.index()], ..f }, forced));
                    }
                }
            } else {
                licensed.push((s2, tags, f, None));
            }

            for (s3, tags, f, forced) in licensed {
                let choices: Vec<(usize, f64)> = match forced {
                    Some((i, _)) => vec![(i, 1.0)],
                    None => {
                        let Some(pd) = normalize(&src.pos(&s3)) else { continue };
                        match src.allowed_pos(word) {
                            Some(allowed) => allowed.into_iter().map(|i| (i, pd[i])).collect(),
                            None => pd.into_iter().enumerate().collect(),
                        }
                    }
                };
                for (p, pp) in choices {
                    if pp == 0.0 {
                        continue;
                    }
                    let pw = match forced {
                        Some((_, Corr::M)) => 1.0,
                        _ => src.word(&s3, p, word),
                    };
                    if pw == 0.0 {
                        continue;
                    }
                    let mut s4 = s3.clone();
                    s4.push_word(tags.e, &src.pos_tags()[p], word);
                    out.push(Expansion { state: s4, tags, pos: p, factors: Factors { p: pp, w: pw, ..f } });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub state: State,
    /// Natural-log probability of the path.
    pub logp: f64,
    pub tags: Vec<GoldTag>,
    pub pos: Vec<usize>,
    pub factors: Vec<Factors>,
}

/// Best interpretation of a turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub words: Vec<String>,
    pub pos: Vec<String>,
    pub tags: Vec<GoldTag>,
    pub factors: Vec<Factors>,
    /// Natural-log probability of the best path.
    pub logp: f64,
    pub repairs: Vec<RepairSpan>,
    /// Words left after removing reparanda and editing terms.
    pub corrected: Vec<String>,
    /// `log2 Pr(w_i | w_1..w_{i-1})` summed over surviving hypotheses.
    pub word_log2: Vec<f64>,
    /// Number of hypotheses kept after each word.
    pub survivors: Vec<usize>,
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Beam search over a turn; `words` ends with the end-of-turn token.
/// Hypotheses are ranked by probability with ties kept in generation
/// order, and the `cfg.beam` best survive each word.
pub fn decode_turn(
    src: &dyn ProbSource,
    cfg: &LmConfig,
    words: &[String],
    silences: &[Option<f64>],
) -> Result<Decoded, LmError> {
    let mut beam = vec![Hypothesis { state: State::new(), logp: 0.0, tags: Vec::new(), pos: Vec::new(), factors: Vec::new() }];
    let mut word_log2 = Vec::with_capacity(words.len());
    let mut survivors = Vec::with_capacity(words.len());
    for (i, word) in words.iter().enumerate() {
        let gap = gap_before(words, silences, i);
        let before = log_sum_exp(beam.iter().map(|h| h.logp));
        let mut next = Vec::new();
        for h in &beam {
            for x in expand(src, cfg, &h.state, word, gap) {
                let mut tags = h.tags.clone();
                tags.push(x.tags);
                let mut pos = h.pos.clone();
                pos.push(x.pos);
                let mut factors = h.factors.clone();
                factors.push(x.factors);
                next.push(Hypothesis { state: x.state, logp: h.logp + x.factors.product().ln(), tags, pos, factors });
            }
        }
        if next.is_empty() {
            return Err(LmError::DeadEnd { position: i, word: word.clone() });
        }
        let after = log_sum_exp(next.iter().map(|h| h.logp));
        word_log2.push((after - before) / std::f64::consts::LN_2);
        next.sort_by(|a, b| b.logp.total_cmp(&a.logp));
        next.truncate(cfg.beam);
        survivors.push(next.len());
        beam = next;
    }
    let best = beam.into_iter().next().expect("beam is never empty");
    let names = src.pos_tags();
    Ok(Decoded {
        words: words.to_vec(),
        pos: best.pos.iter().map(|&p| names[p].clone()).collect(),
        tags: best.tags,
        factors: best.factors,
        logp: best.logp,
        repairs: best.state.repairs.clone(),
        corrected: best.state.corrected().into_iter().map(|p| words[p].clone()).collect(),
        word_log2,
        survivors,
    })
}

/// The expansions along the given tags and POS sequence, up to the first
/// word the model cannot produce.
pub fn follow_gold_path(
    src: &dyn ProbSource,
    cfg: &LmConfig,
    words: &[String],
    silences: &[Option<f64>],
    tags: &[GoldTag],
    pos: &[String],
) -> Vec<Expansion> {
    let mut st = State::new();
    let mut out: Vec<Expansion> = Vec::with_capacity(words.len());
    for (i, word) in words.iter().enumerate() {
        let want = cfg.project(tags[i]);
        let found = expand(src, cfg, &st, word, gap_before(words, silences, i))
            .into_iter()
            .find(|x| x.tags == want && src.pos_tags()[x.pos] == pos[i]);
        match found {
            Some(x) => {
                st = x.state.clone();
                out.push(x);
            }
            None => break,
        }
    }
    out
}

/// Per-word `log2` of the joint factor along the given tags and POS
/// sequence, or `None` from the first word the model cannot produce.
pub fn score_gold_path(
    src: &dyn ProbSource,
    cfg: &LmConfig,
    words: &[String],
    silences: &[Option<f64>],
    tags: &[GoldTag],
    pos: &[String],
) -> Vec<Option<f64>> {
    let path = follow_gold_path(src, cfg, words, silences, tags, pos);
    let mut out: Vec<Option<f64>> = path.iter().map(|x| Some(x.factors.product().log2())).collect();
    out.resize(words.len(), None);
    out
}
