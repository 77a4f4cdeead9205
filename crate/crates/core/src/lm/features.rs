//! Feature layouts of the model's decision trees and their values for a
//! hypothesis state.

use super::state::{Item, LicensorView, OnsetView, State};
use crate::clustering::{BitCode, ClassTree, WordClusters, LOW};
use crate::dtree::{FeatureSpec, Value};
use crate::tags::{EditTag, RepairTag, ToneTag};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Bit codes of POS tags, markers and words.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coder {
    pos: BTreeMap<String, BitCode>,
    words: BTreeMap<String, BTreeMap<String, BitCode>>,
}

impl Coder {
    pub fn new(pos_tree: &ClassTree, words: &WordClusters) -> Self {
        Coder {
            pos: pos_tree.codes(),
            words: words.trees.iter().map(|(p, t)| (p.clone(), t.codes())).collect(),
        }
    }

    pub fn pos_code(&self, pos: &str) -> BitCode {
        self.pos.get(pos).cloned().unwrap_or_else(|| BitCode::new(Vec::new()))
    }

    /// Code of the word within its POS tag's tree; low-occurring and unseen
    /// words share the `<low>` code, markers get the empty code.
    pub fn word_code(&self, item: &Item) -> BitCode {
        let empty = || BitCode::new(Vec::new());
        if item.is_marker() {
            return empty();
        }
        match self.words.get(&*item.pos) {
            Some(codes) => codes.get(&*item.word).or_else(|| codes.get(LOW)).cloned().unwrap_or_else(empty),
            None => empty(),
        }
    }
}

/// Builder for a feature layout, tracking prerequisite indices.
struct Layout {
    specs: Vec<FeatureSpec>,
}

impl Layout {
    fn new() -> Self {
        Layout { specs: Vec::new() }
    }

    fn history(&mut self, prefix: &str, order: usize, pos_constraint: bool) {
        let mut prev_pos: Option<usize> = None;
        for j in 1..=order {
            let p = self.specs.len();
            let requires = if pos_constraint { prev_pos } else { None };
            self.specs.push(FeatureSpec::bits(&format!("{prefix}P-{j}"), requires));
            self.specs.push(FeatureSpec::bits(&format!("{prefix}W-{j}"), Some(p)));
            prev_pos = Some(p);
        }
    }

    fn num(&mut self, name: &str) {
        self.specs.push(FeatureSpec::numeric(name));
    }

    fn cat(&mut self, name: &str) {
        self.specs.push(FeatureSpec::categorical(name));
    }

    fn bits(&mut self, name: &str) {
        self.specs.push(FeatureSpec::bits(name, None));
    }
}

pub fn tone_layout(order: usize, pc: bool) -> Vec<FeatureSpec> {
    let mut l = Layout::new();
    l.history("t", order, pc);
    l.history("r", order, pc);
    l.cat("ET-state");
    l.num("ET-prev");
    l.specs
}

pub fn edit_layout(order: usize, pc: bool) -> Vec<FeatureSpec> {
    let mut specs = tone_layout(order, pc);
    specs.push(FeatureSpec::categorical("T"));
    specs
}

pub fn repair_layout(order: usize, pc: bool) -> Vec<FeatureSpec> {
    let mut specs = edit_layout(order, pc);
    specs.push(FeatureSpec::categorical("E"));
    specs
}

pub fn onset_layout(order: usize, pc: bool) -> Vec<FeatureSpec> {
    let mut l = Layout::new();
    l.cat("R");
    l.num("Len");
    l.bits("OP");
    l.history("o", order, pc);
    l.num("Tones");
    l.num("DM");
    l.num("FP");
    l.cat("Prev");
    l.specs
}

pub fn licensor_layout(order: usize, pc: bool) -> Vec<FeatureSpec> {
    let mut l = Layout::new();
    l.bits("LP");
    l.history("p", order, pc);
    l.cat("R");
    for n in ["Len", "RLen", "RRest", "ALen"] {
        l.num(n);
    }
    l.cat("PrevC");
    l.num("RepX");
    l.num("AltX");
    l.specs
}

/// Layout of the POS tree and of every word tree.
pub fn pos_layout(order: usize, pc: bool) -> Vec<FeatureSpec> {
    let mut l = Layout::new();
    l.history("p", order, pc);
    l.cat("ET-state");
    l.num("ET-prev");
    l.specs
}

#[derive(Debug, Clone, Copy)]
pub struct Extractor<'a> {
    pub coder: &'a Coder,
    pub order: usize,
}

impl Extractor<'_> {
    fn history(&self, ctx: &[Item], out: &mut Vec<Value>) {
        let pad = Item::turn_start();
        for j in 1..=self.order {
            let item = if j <= ctx.len() { &ctx[ctx.len() - j] } else { &pad };
            out.push(Value::Code(self.coder.pos_code(&item.pos)));
            out.push(Value::Code(self.coder.word_code(item)));
        }
    }

    fn et(st: &State, out: &mut Vec<Value>) {
        out.push(Value::Cat(st.et_state.index()));
        out.push(Value::Num(f64::from(st.et_prev)));
    }

    pub fn tone(&self, st: &State) -> Vec<Value> {
        let mut v = Vec::new();
        self.history(st.t_ctx(), &mut v);
        self.history(st.r_ctx(), &mut v);
        Self::et(st, &mut v);
        v
    }

    pub fn edit(&self, st: &State, t: ToneTag) -> Vec<Value> {
        let mut v = self.tone(st);
        v.push(Value::Cat(t.index() as u32));
        v
    }

    pub fn repair(&self, st: &State, t: ToneTag, e: EditTag) -> Vec<Value> {
        let mut v = self.edit(st, t);
        v.push(Value::Cat(e.index() as u32));
        v
    }

    pub fn onset(&self, view: &OnsetView<'_>) -> Vec<Value> {
        let mut v = vec![
            Value::Cat(view.r.index() as u32),
            Value::Num(view.len as f64),
            Value::Code(self.coder.pos_code(view.onset_pos)),
        ];
        self.history(view.prior, &mut v);
        v.push(Value::Num(view.tones as f64));
        v.push(Value::Num(view.dms as f64));
        v.push(Value::Num(view.fps as f64));
        v.push(Value::Cat(view.prev));
        v
    }

    pub fn licensor(&self, st: &State, view: &LicensorView) -> Vec<Value> {
        let mut v = vec![Value::Code(self.coder.pos_code(&view.licensor_pos))];
        self.history(&st.ctx, &mut v);
        v.push(Value::Cat(view.r.index() as u32));
        for n in [view.len, view.rlen, view.rrest] {
            v.push(Value::Num(n as f64));
        }
        v.push(Value::Num(f64::from(view.alen)));
        v.push(Value::Cat(view.prev_c));
        v.push(Value::Num(view.rep_x as f64));
        v.push(Value::Num(f64::from(view.alt_x)));
        v
    }

    pub fn pos(&self, st: &State) -> Vec<Value> {
        let mut v = Vec::new();
        self.history(&st.ctx, &mut v);
        Self::et(st, &mut v);
        v
    }
}

/// Tone-tree event; with null decomposition the null tone is split by the
/// editing-term tag.
pub fn tone_event(t: ToneTag, e: EditTag, decompose: bool) -> usize {
    match (t, decompose) {
        (ToneTag::Tone, true) => 0,
        (ToneTag::Null, true) => 1 + e.index(),
        (t, false) => t.index(),
    }
}

pub fn tone_events(decompose: bool) -> usize {
    if decompose {
        5
    } else {
        2
    }
}

/// Folds a tone-tree distribution back to `[null, Tone]`.
pub fn tone_dist(d: &[f64], decompose: bool) -> [f64; 2] {
    if decompose {
        [d[1..].iter().sum(), d[0]]
    } else {
        [d[0], d[1]]
    }
}

/// Editing-term event; with null decomposition the null tag is split by
/// the repair tag.
pub fn edit_event(e: EditTag, r: RepairTag, decompose: bool) -> usize {
    if !decompose {
        return e.index();
    }
    match e {
        EditTag::Null => match r {
            RepairTag::Mod => 1,
            RepairTag::Can => 2,
            _ => 0,
        },
        e => 2 + e.index(),
    }
}

pub fn edit_events(decompose: bool) -> usize {
    if decompose {
        6
    } else {
        4
    }
}

pub fn edit_dist(d: &[f64], decompose: bool) -> [f64; 4] {
    if decompose {
        [d[0] + d[1] + d[2], d[3], d[4], d[5]]
    } else {
        [d[0], d[1], d[2], d[3]]
    }
}
