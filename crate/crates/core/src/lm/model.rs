//! The trained model: class trees, decision trees per variable, word trees
//! per POS tag and the silence table.

use super::features::{self, Coder, Extractor};
use super::state::State;
use super::{LicensorView, LmConfig, OnsetView, ProbSource};
use crate::clustering::{cluster_pos_tags, cluster_words, extend_pos_tree_with_utterance_tags, ClassTree, WordClusters, WordMode, LOW};
use crate::corpus::{split_growing_heldout, GoldTurn};
use crate::dtree::{grow_tree, DecisionTree, FeatureSpec, GrowConfig, LexicalTree, Sample};
use crate::silence::SilenceTable;
use crate::tags::{EditTag, RepairTag, ToneTag, TURN};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no training turns")]
    NoData,
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model format version {found} is not supported (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error(transparent)]
    Config(#[from] super::LmError),
    #[error("class tree: {0}")]
    Cluster(#[from] crate::clustering::ClusterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub low_threshold: u64,
    /// Share of training turns used as growing data.
    pub growing_ratio: f64,
    pub seed: u64,
    pub grow: GrowConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { low_threshold: 1, growing_ratio: 0.7, seed: 0, grow: GrowConfig::default() }
    }
}

/// Samples for every tree, from one pass of gold replay.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSamples {
    pub tone: Vec<Sample>,
    pub edit: Vec<Sample>,
    pub repair: Vec<Sample>,
    pub onset: Vec<Sample>,
    pub licensor: Vec<Sample>,
    pub corr: Vec<Sample>,
    pub pos: Vec<Sample>,
    pub word: BTreeMap<String, Vec<Sample>>,
}

/// Word events of one POS tag's tree: known words first, then `<low>`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
struct Vocab {
    words: BTreeMap<String, usize>,
    low: BTreeMap<String, u64>,
}

impl Vocab {
    fn events(&self) -> usize {
        self.words.len() + usize::from(!self.low.is_empty())
    }

    fn event(&self, word: &str) -> usize {
        self.words.get(word).copied().unwrap_or(self.words.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub config: LmConfig,
    pub options: TrainOptions,
    pub pos_tree: ClassTree,
    pub word_clusters: WordClusters,
    pub pos_tags: Vec<String>,
    /// POS tags seen with each word.
    pub tag_dict: BTreeMap<String, Vec<usize>>,
    /// POS tags whose word tree reserves mass for unknown words.
    pub unknown_pos: Vec<usize>,
    pub tone: Option<DecisionTree>,
    pub edit: Option<DecisionTree>,
    pub repair: Option<DecisionTree>,
    pub onset: Option<DecisionTree>,
    pub licensor: Option<DecisionTree>,
    pub corr: Option<DecisionTree>,
    pub pos: DecisionTree,
    pub words: BTreeMap<String, LexicalTree>,
    pub silence: Option<SilenceTable>,
    #[serde(skip)]
    coder: Coder,
}

struct Replayer<'a> {
    cfg: &'a LmConfig,
    ex: Extractor<'a>,
    pos_index: &'a BTreeMap<String, usize>,
    vocab: &'a BTreeMap<String, Vocab>,
}

impl Replayer<'_> {
    fn replay(&self, gold: &GoldTurn, out: &mut TrainingSamples) {
        let cfg = self.cfg;
        let dec = cfg.decompose_null;
        let mut st = State::new();
        for i in 0..gold.len() {
            let tag = cfg.project(gold.tags[i]);
            let (t, e, r) = (tag.t, tag.e, tag.r);
            if cfg.tones && i > 0 {
                out.tone.push(Sample { values: self.ex.tone(&st), event: features::tone_event(t, e, dec) });
            }
            if cfg.repairs {
                if !st.legal_er().contains(&(e, r)) {
                    return;
                }
                out.edit.push(Sample { values: self.ex.edit(&st, t), event: features::edit_event(e, r, dec) });
                out.repair.push(Sample { values: self.ex.repair(&st, t, e), event: r.index() });
            }
            st.apply_ter(t, e, r);
            if r.has_onset() {
                let cut = tag.o.and_then(|o| st.onset_candidates().iter().position(|&p| p == o));
                match (cfg.correction, cut) {
                    (true, Some(k)) => {
                        for c in 0..st.onset_candidates().len() {
                            let values = self.ex.onset(&st.onset_view(r, c));
                            out.onset.push(Sample { values, event: usize::from(c == k) });
                        }
                        st.apply_onset(r, k);
                    }
                    _ => st.apply_marker(r),
                }
            }
            let in_et = matches!(e, EditTag::Push | EditTag::Et);
            if cfg.correction && !in_et && st.active().is_some() {
                let (Some(l), Some(c)) = (tag.l, tag.c) else { return };
                let views = st.licensor_views();
                let l = usize::from(l);
                if l == 0 || l > views.len() {
                    return;
                }
                for (k, v) in views.iter().enumerate() {
                    out.licensor.push(Sample { values: self.ex.licensor(&st, v), event: usize::from(k + 1 == l) });
                }
                out.corr.push(Sample { values: self.ex.licensor(&st, &views[l - 1]), event: c.index() });
                st.apply_licensor(l, c);
            }
            let pos = &gold.pos[i];
            let values = self.ex.pos(&st);
            if let (Some(&p), Some(v)) = (self.pos_index.get(pos), self.vocab.get(pos)) {
                out.word.entry(pos.clone()).or_default().push(Sample { values: values.clone(), event: v.event(&gold.words[i]) });
                out.pos.push(Sample { values, event: p });
            }
            st.push_word(e, pos, &gold.words[i]);
        }
    }
}

fn train_tree(specs: Vec<FeatureSpec>, n: usize, g: &[Sample], h: &[Sample], grow: &GrowConfig) -> DecisionTree {
    let mut tree = grow_tree(&specs, n, g, h, grow);
    tree.smooth(h);
    tree.propagate_unreliable();
    tree
}

impl TrainedModel {
    /// Trains every tree the configuration calls for. Turns are split into
    /// growing and heldout data by `options.growing_ratio`.
    pub fn train(turns: &[GoldTurn], config: LmConfig, options: TrainOptions) -> Result<Self, ModelError> {
        config.validate()?;
        if turns.is_empty() {
            return Err(ModelError::NoData);
        }
        let pos_seqs: Vec<Vec<&str>> = turns.iter().map(|t| t.pos.iter().map(String::as_str).collect()).collect();
        let base = cluster_pos_tags(&pos_seqs).ok_or(ModelError::NoData)?;
        let pos_tree = extend_pos_tree_with_utterance_tags(&base)?;
        let word_seqs: Vec<Vec<(&str, &str)>> =
            turns.iter().map(|t| t.words.iter().zip(&t.pos).map(|(w, p)| (w.as_str(), p.as_str())).collect()).collect();
        let word_clusters = cluster_words(&word_seqs, WordMode::ForcePos, options.low_threshold);

        let pos_tags: Vec<String> =
            turns.iter().flat_map(|t| t.pos.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
        let pos_index: BTreeMap<String, usize> = pos_tags.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        let mut dict: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for t in turns {
            for (w, p) in t.words.iter().zip(&t.pos) {
                *counts.entry((p.clone(), w.clone())).or_insert(0) += 1;
                dict.entry(w.clone()).or_default().insert(pos_index[p]);
            }
        }
        let mut vocab: BTreeMap<String, Vocab> = pos_tags.iter().map(|p| (p.clone(), Vocab::default())).collect();
        for ((p, w), c) in counts {
            let v = vocab.get_mut(&p).unwrap();
            if c <= options.low_threshold {
                v.low.insert(w, c);
            } else {
                let id = v.words.len();
                v.words.insert(w, id);
            }
        }
        let coder = Coder::new(&pos_tree, &word_clusters);
        let (g_idx, h_idx) = split_growing_heldout(turns.len(), options.growing_ratio, options.seed);
        let replayer = Replayer {
            cfg: &config,
            ex: Extractor { coder: &coder, order: config.order },
            pos_index: &pos_index,
            vocab: &vocab,
        };
        let mut g = TrainingSamples::default();
        let mut h = TrainingSamples::default();
        for &i in &g_idx {
            replayer.replay(&turns[i], &mut g);
        }
        for &i in &h_idx {
            replayer.replay(&turns[i], &mut h);
        }

        let (order, pc, dec) = (config.order, config.pos_constraint, config.decompose_null);
        let grow = &options.grow;
        let (g, h) = (&g, &h);
        let opt = |on: bool, f: &(dyn Fn() -> DecisionTree + Sync)| on.then(f);
        let (tone, edit, repair, onset, licensor, corr, pos, words) = std::thread::scope(|s| {
            let tone = s.spawn(|| {
                opt(config.tones, &|| train_tree(features::tone_layout(order, pc), features::tone_events(dec), &g.tone, &h.tone, grow))
            });
            let edit = s.spawn(|| {
                opt(config.repairs, &|| train_tree(features::edit_layout(order, pc), features::edit_events(dec), &g.edit, &h.edit, grow))
            });
            let repair = s.spawn(|| {
                opt(config.repairs, &|| train_tree(features::repair_layout(order, pc), 4, &g.repair, &h.repair, grow))
            });
            let onset = s.spawn(|| {
                opt(config.correction, &|| train_tree(features::onset_layout(order, pc), 2, &g.onset, &h.onset, grow))
            });
            let licensor = s.spawn(|| {
                opt(config.correction, &|| {
                    train_tree(features::licensor_layout(order, pc), 2, &g.licensor, &h.licensor, grow)
                })
            });
            let corr = s.spawn(|| {
                opt(config.correction, &|| train_tree(features::licensor_layout(order, pc), 3, &g.corr, &h.corr, grow))
            });
            let pos = s.spawn(|| train_tree(features::pos_layout(order, pc), pos_tags.len(), &g.pos, &h.pos, grow));
            let word_handles: Vec<_> = vocab
                .iter()
                .map(|(p, v)| {
                    s.spawn(move || {
                        let empty = Vec::new();
                        let gs = g.word.get(p).unwrap_or(&empty);
                        let hs = h.word.get(p).unwrap_or(&empty);
                        let tree = train_tree(features::pos_layout(order, pc), v.events(), gs, hs, grow);
                        let low_event = (!v.low.is_empty()).then_some(v.words.len());
                        (p.clone(), LexicalTree { tree, words: v.words.clone(), low_event, low_words: v.low.clone() })
                    })
                })
                .collect();
            let words: BTreeMap<String, LexicalTree> = word_handles.into_iter().map(|h| h.join().unwrap()).collect();
            (
                tone.join().unwrap(),
                edit.join().unwrap(),
                repair.join().unwrap(),
                onset.join().unwrap(),
                licensor.join().unwrap(),
                corr.join().unwrap(),
                pos.join().unwrap(),
                words,
            )
        });
        let unknown_pos = pos_tags.iter().enumerate().filter(|(_, p)| words[*p].admits_unknown()).map(|(i, _)| i).collect();
        let silence = config.silence.then(|| SilenceTable::from_gold(turns));
        Ok(TrainedModel {
            format_version: FORMAT_VERSION,
            config,
            options,
            pos_tree,
            word_clusters,
            pos_tags,
            tag_dict: dict.into_iter().map(|(w, s)| (w, s.into_iter().collect())).collect(),
            unknown_pos,
            tone,
            edit,
            repair,
            onset,
            licensor,
            corr,
            pos,
            words,
            silence,
            coder,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let mut m: TrainedModel = serde_json::from_str(text)?;
        if m.format_version != FORMAT_VERSION {
            return Err(ModelError::Version { found: m.format_version });
        }
        m.coder = Coder::new(&m.pos_tree, &m.word_clusters);
        Ok(m)
    }

    fn ex(&self) -> Extractor<'_> {
        Extractor { coder: &self.coder, order: self.config.order }
    }

    /// Every decision tree with a display name.
    pub fn trees(&self) -> Vec<(String, &DecisionTree)> {
        let mut out: Vec<(String, &DecisionTree)> = Vec::new();
        for (name, t) in [
            ("T", &self.tone),
            ("E", &self.edit),
            ("R", &self.repair),
            ("O", &self.onset),
            ("L", &self.licensor),
            ("C", &self.corr),
        ] {
            if let Some(t) = t {
                out.push((name.to_string(), t));
            }
        }
        out.push(("P".to_string(), &self.pos));
        for (p, w) in &self.words {
            out.push((format!("W[{p}]"), &w.tree));
        }
        out
    }

    pub fn knows_pos(&self, pos: &str) -> bool {
        self.pos_tags.iter().any(|p| p == pos) || pos == TURN
    }
}

impl ProbSource for TrainedModel {
    fn pos_tags(&self) -> &[String] {
        &self.pos_tags
    }

    fn tone(&self, st: &State) -> [f64; 2] {
        match &self.tone {
            Some(t) => features::tone_dist(t.distribution(&self.ex().tone(st)), self.config.decompose_null),
            None => [1.0, 0.0],
        }
    }

    fn edit(&self, st: &State, t: ToneTag) -> [f64; 4] {
        match &self.edit {
            Some(tree) => features::edit_dist(tree.distribution(&self.ex().edit(st, t)), self.config.decompose_null),
            None => [1.0, 0.0, 0.0, 0.0],
        }
    }

    fn repair(&self, st: &State, t: ToneTag, e: EditTag) -> [f64; 4] {
        match &self.repair {
            Some(tree) => {
                let d = tree.distribution(&self.ex().repair(st, t, e));
                [d[0], d[1], d[2], d[3]]
            }
            None => {
                let mut d = [0.0; 4];
                d[RepairTag::Null.index()] = 1.0;
                d
            }
        }
    }

    fn onset(&self, _st: &State, view: &OnsetView<'_>) -> f64 {
        self.onset.as_ref().map_or(1.0, |t| t.prob(&self.ex().onset(view), 1))
    }

    fn licensor(&self, st: &State, view: &LicensorView) -> f64 {
        self.licensor.as_ref().map_or(1.0, |t| t.prob(&self.ex().licensor(st, view), 1))
    }

    fn correspondence(&self, st: &State, view: &LicensorView) -> [f64; 3] {
        match &self.corr {
            Some(t) => {
                let d = t.distribution(&self.ex().licensor(st, view));
                [d[0], d[1], d[2]]
            }
            None => [0.0, 0.0, 1.0],
        }
    }

    fn pos(&self, st: &State) -> Vec<f64> {
        self.pos.distribution(&self.ex().pos(st)).to_vec()
    }

    fn word(&self, st: &State, pos: usize, word: &str) -> f64 {
        let name = &self.pos_tags[pos];
        let known = self.tag_dict.get(word);
        if known.is_some_and(|ps| !ps.contains(&pos)) {
            return 0.0;
        }
        let tree = &self.words[name];
        let values = self.ex().pos(st);
        match known {
            Some(_) => tree.prob(&values, Some(word)),
            None if word == LOW => 0.0,
            None => tree.prob(&values, None),
        }
    }

    fn allowed_pos(&self, word: &str) -> Option<Vec<usize>> {
        Some(self.tag_dict.get(word).cloned().unwrap_or_else(|| self.unknown_pos.clone()))
    }

    fn silence(&self) -> Option<&SilenceTable> {
        self.silence.as_ref()
    }
}
