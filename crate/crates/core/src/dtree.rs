//! Decision trees over mixed contexts with composite (pylon) questions,
//! heldout-checked growth, interpolated smoothing, and word trees with
//! low-occurring and unknown word handling.

use crate::clustering::BitCode;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Round-off guard for impurity comparisons.
pub const EPSILON: f64 = 1e-7;
/// Nodes with fewer heldout events than this share interpolation weights.
pub const LAMBDA_MIN_EVENTS: f64 = 100.0;
/// Upper bound on a node's weight, so every node keeps some of its parent's
/// mass and no event gets probability zero.
pub const MAX_LAMBDA: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Cat(u32),
    Code(BitCode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Bits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Questions on this feature may only be asked once every growing
    /// sample at the node has the same value of this bit-coded feature.
    pub requires: Option<usize>,
}

impl FeatureSpec {
    pub fn numeric(name: &str) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Numeric, requires: None }
    }
    pub fn categorical(name: &str) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Categorical, requires: None }
    }
    pub fn bits(name: &str, requires: Option<usize>) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Bits, requires }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub values: Vec<Value>,
    pub event: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Question {
    /// Is bit `bit` of the code equal to 1? Codes too short answer no.
    Bit { feature: usize, bit: usize },
    Ge { feature: usize, threshold: f64 },
    In { feature: usize, set: Vec<u32> },
}

impl Question {
    pub fn answer(&self, values: &[Value]) -> bool {
        match self {
            Question::Bit { feature, bit } => match &values[*feature] {
                Value::Code(c) => c.bit(*bit) == Some(true),
                v => panic!("bit question on non-code value {v:?}"),
            },
            Question::Ge { feature, threshold } => match &values[*feature] {
                Value::Num(x) => *x >= *threshold,
                v => panic!("threshold question on non-numeric value {v:?}"),
            },
            Question::In { feature, set } => match &values[*feature] {
                Value::Cat(x) => set.binary_search(x).is_ok(),
                v => panic!("set question on non-categorical value {v:?}"),
            },
        }
    }

    pub fn feature(&self) -> usize {
        match self {
            Question::Bit { feature, .. } | Question::Ge { feature, .. } | Question::In { feature, .. } => *feature,
        }
    }

    fn describe(&self, features: &[FeatureSpec]) -> String {
        match self {
            Question::Bit { feature, bit } => format!("(bit {} {bit})", features[*feature].name),
            Question::Ge { feature, threshold } => format!("(ge {} {threshold})", features[*feature].name),
            Question::In { feature, set } => {
                let s: Vec<String> = set.iter().map(u32::to_string).collect();
                format!("(in {} {{{}}})", features[*feature].name, s.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
}

/// `true` extended left to right by `(pylon ∧ q)` or `(pylon ∨ q)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Pylon {
    pub steps: Vec<(Connective, Question)>,
}

impl Pylon {
    pub fn answer(&self, values: &[Value]) -> bool {
        self.steps.iter().fold(true, |acc, (c, q)| match c {
            Connective::And => acc && q.answer(values),
            Connective::Or => acc || q.answer(values),
        })
    }

    /// Prefix expression such as `(or (and true (bit pP1 0)) (ge Len 2.5))`.
    pub fn describe(&self, features: &[FeatureSpec]) -> String {
        self.steps.iter().fold("true".to_string(), |acc, (c, q)| {
            let op = if *c == Connective::And { "and" } else { "or" };
            format!("({op} {acc} {})", q.describe(features))
        })
    }
}

/// Shannon entropy (bits) of the relative frequencies of `counts`.
pub fn impurity(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -counts.iter().filter(|&&c| c > 0.0).map(|&c| c / total * (c / total).log2()).sum::<f64>()
}

fn event_counts(samples: &[&Sample], n_events: usize) -> Vec<f64> {
    let mut c = vec![0.0; n_events];
    for s in samples {
        c[s.event] += 1.0;
    }
    c
}

/// Decrease in node impurity from splitting `samples` by `yes`.
fn split_gain(samples: &[&Sample], yes: &[bool], total: &[f64], base: f64) -> f64 {
    let n = samples.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mut yc = vec![0.0; total.len()];
    let mut ny = 0.0;
    for (s, &y) in samples.iter().zip(yes) {
        if y {
            yc[s.event] += 1.0;
            ny += 1.0;
        }
    }
    let nc: Vec<f64> = total.iter().zip(&yc).map(|(t, y)| t - y).collect();
    base - (ny * impurity(&yc) + (n - ny) * impurity(&nc)) / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowConfig {
    pub min_size: usize,
    pub beam: usize,
    pub epsilon: f64,
    /// Upper bound on elementary questions per pylon.
    pub max_pylon: usize,
}

impl Default for GrowConfig {
    fn default() -> Self {
        GrowConfig { min_size: 10, beam: 10, epsilon: EPSILON, max_pylon: 8 }
    }
}

/// Length of the code prefix shared by all samples, and whether the codes are identical.
fn pinned(samples: &[&Sample], feature: usize) -> (usize, bool) {
    let mut it = samples.iter().map(|s| match &s.values[feature] {
        Value::Code(c) => c,
        v => panic!("feature {feature} is not bit-coded: {v:?}"),
    });
    let Some(first) = it.next() else { return (0, true) };
    let mut prefix = first.len();
    let mut same = true;
    for c in it {
        let p = first.common_prefix(c);
        if p != first.len() || c.len() != first.len() {
            same = false;
        }
        prefix = prefix.min(p);
    }
    (prefix, same)
}

/// Elementary questions askable at a node holding `samples`.
pub fn elementary_questions(features: &[FeatureSpec], samples: &[&Sample], n_events: usize) -> Vec<Question> {
    let mut out = Vec::new();
    let mut pin_cache: BTreeMap<usize, (usize, bool)> = BTreeMap::new();
    let mut pin = |f: usize| *pin_cache.entry(f).or_insert_with(|| pinned(samples, f));
    let total = event_counts(samples, n_events);
    let base = impurity(&total);
    for (f, feat) in features.iter().enumerate() {
        if let Some(r) = feat.requires {
            if !pin(r).1 {
                continue;
            }
        }
        match feat.kind {
            FeatureKind::Bits => {
                let (p, same) = pin(f);
                if !same {
                    out.push(Question::Bit { feature: f, bit: p });
                }
            }
            FeatureKind::Numeric => {
                let vals: BTreeSet<u64> = samples
                    .iter()
                    .map(|s| match s.values[f] {
                        Value::Num(x) => x.to_bits(),
                        ref v => panic!("feature {f} is not numeric: {v:?}"),
                    })
                    .collect();
                let mut vals: Vec<f64> = vals.into_iter().map(f64::from_bits).collect();
                vals.sort_by(f64::total_cmp);
                for w in vals.windows(2) {
                    out.push(Question::Ge { feature: f, threshold: (w[0] + w[1]) / 2.0 });
                }
            }
            FeatureKind::Categorical => {
                if let Some(set) = best_subset(samples, f, &total, base) {
                    out.push(Question::In { feature: f, set });
                }
            }
        }
    }
    out
}

/// Greedy insert/delete search for the value subset that best splits the node.
fn best_subset(samples: &[&Sample], f: usize, total: &[f64], base: f64) -> Option<Vec<u32>> {
    let cat = |s: &Sample| match s.values[f] {
        Value::Cat(x) => x,
        ref v => panic!("feature {f} is not categorical: {v:?}"),
    };
    let values: BTreeSet<u32> = samples.iter().map(|s| cat(s)).collect();
    if values.len() < 2 {
        return None;
    }
    let gain = |set: &BTreeSet<u32>| {
        let yes: Vec<bool> = samples.iter().map(|s| set.contains(&cat(s))).collect();
        split_gain(samples, &yes, total, base)
    };
    let mut set = BTreeSet::new();
    let mut best = 0.0;
    for _ in 0..2 * values.len() {
        let mut step: Option<(f64, BTreeSet<u32>)> = None;
        for &v in &values {
            let mut s = set.clone();
            if !s.remove(&v) {
                s.insert(v);
            }
            if s.is_empty() || s.len() == values.len() {
                continue;
            }
            let g = gain(&s);
            if step.as_ref().is_none_or(|(bg, _)| g > *bg) {
                step = Some((g, s));
            }
        }
        match step {
            Some((g, s)) if g > best + EPSILON => {
                best = g;
                set = s;
            }
            _ => break,
        }
    }
    (!set.is_empty()).then(|| set.into_iter().collect())
}

/// A pylon with its impurity decreases on growing and heldout data.
#[derive(Debug, Clone, PartialEq)]
pub struct FoundPylon {
    pub pylon: Pylon,
    pub growing_gain: f64,
    pub heldout_gain: f64,
}

#[derive(Clone)]
struct Contender {
    steps: Vec<(Connective, usize)>,
    yes_g: Vec<bool>,
    yes_h: Vec<bool>,
    gd: f64,
    hd: f64,
    change: f64,
}

/// Beam search for a composite question. Each round extends every agenda
/// pylon by one elementary question, keeping extensions that lower growing
/// impurity by more than `epsilon`; the best `beam` become contenders, and
/// those that did not raise heldout impurity continue. The winner has the
/// largest growing-data decrease; its last question is dropped if it raised
/// heldout impurity.
pub fn find_best_pylon(
    features: &[FeatureSpec],
    n_events: usize,
    growing: &[&Sample],
    heldout: &[&Sample],
    config: &GrowConfig,
) -> Option<FoundPylon> {
    let tg = event_counts(growing, n_events);
    let th = event_counts(heldout, n_events);
    let (bg, bh) = (impurity(&tg), impurity(&th));
    if bg <= 0.0 {
        return None;
    }
    let questions = elementary_questions(features, growing, n_events);
    let ans_g: Vec<Vec<bool>> = questions.iter().map(|q| growing.iter().map(|s| q.answer(&s.values)).collect()).collect();
    let ans_h: Vec<Vec<bool>> = questions.iter().map(|q| heldout.iter().map(|s| q.answer(&s.values)).collect()).collect();

    let root = Contender {
        steps: Vec::new(),
        yes_g: vec![true; growing.len()],
        yes_h: vec![true; heldout.len()],
        gd: 0.0,
        hd: 0.0,
        change: 0.0,
    };
    let mut agenda = vec![root];
    let mut contenders: Vec<Contender> = Vec::new();
    let mut seen: BTreeSet<Vec<(bool, usize)>> = BTreeSet::new();
    while !agenda.is_empty() {
        let mut ext: Vec<Contender> = Vec::new();
        for p in &agenda {
            if p.steps.len() >= config.max_pylon {
                continue;
            }
            for (qi, _) in questions.iter().enumerate() {
                if p.steps.iter().any(|&(_, q)| q == qi) {
                    continue;
                }
                let conns: &[Connective] =
                    if p.steps.is_empty() { &[Connective::And] } else { &[Connective::And, Connective::Or] };
                for &c in conns {
                    let mut steps = p.steps.clone();
                    steps.push((c, qi));
                    let key: Vec<(bool, usize)> = steps.iter().map(|&(c, q)| (c == Connective::Or, q)).collect();
                    if seen.contains(&key) {
                        continue;
                    }
                    let comb = |a: &[bool], b: &[bool]| -> Vec<bool> {
                        a.iter()
                            .zip(b)
                            .map(|(&x, &y)| if c == Connective::And { x && y } else { x || y })
                            .collect()
                    };
                    let yes_g = comb(&p.yes_g, &ans_g[qi]);
                    let gd = split_gain(growing, &yes_g, &tg, bg);
                    if gd - p.gd > config.epsilon {
                        seen.insert(key);
                        let yes_h = comb(&p.yes_h, &ans_h[qi]);
                        let hd = split_gain(heldout, &yes_h, &th, bh);
                        ext.push(Contender { steps, yes_g, yes_h, gd, hd, change: hd - p.hd });
                    }
                }
            }
        }
        ext.sort_by(|a, b| b.gd.total_cmp(&a.gd));
        ext.truncate(config.beam);
        agenda = ext.iter().filter(|c| c.change >= 0.0).cloned().collect();
        contenders.extend(ext);
    }
    let mut best = contenders.into_iter().reduce(|a, b| if b.gd > a.gd { b } else { a })?;
    if best.change < 0.0 {
        best.steps.pop();
        if best.steps.is_empty() {
            return None;
        }
        let eval = |ans: &[Vec<bool>], n: usize| -> Vec<bool> {
            (0..n)
                .map(|i| {
                    best.steps.iter().fold(true, |acc, &(c, q)| match c {
                        Connective::And => acc && ans[q][i],
                        Connective::Or => acc || ans[q][i],
                    })
                })
                .collect()
        };
        best.gd = split_gain(growing, &eval(&ans_g, growing.len()), &tg, bg);
        best.hd = split_gain(heldout, &eval(&ans_h, heldout.len()), &th, bh);
    }
    let pylon = Pylon { steps: best.steps.iter().map(|&(c, q)| (c, questions[q].clone())).collect() };
    Some(FoundPylon { pylon, growing_gain: best.gd, heldout_gain: best.hd })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub pylon: Pylon,
    pub yes: usize,
    pub no: usize,
    pub growing_gain: f64,
    pub heldout_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<usize>,
    pub split: Option<Split>,
    pub growing_counts: Vec<f64>,
    pub heldout_counts: Vec<f64>,
    /// Smoothed distribution over events.
    pub dist: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub features: Vec<FeatureSpec>,
    pub n_events: usize,
    pub nodes: Vec<Node>,
}

fn rel_freq(counts: &[f64]) -> Vec<f64> {
    let t: f64 = counts.iter().sum();
    if t > 0.0 {
        counts.iter().map(|c| c / t).collect()
    } else {
        vec![0.0; counts.len()]
    }
}

/// Grows a tree from the root. A leaf is expanded only if it holds at least
/// `min_size` growing samples and the best pylon lowers impurity by at least
/// `epsilon` on both growing and heldout data. Distributions start as
/// relative frequencies (uniform where a node has no data).
pub fn grow_tree(
    features: &[FeatureSpec],
    n_events: usize,
    growing: &[Sample],
    heldout: &[Sample],
    config: &GrowConfig,
) -> DecisionTree {
    let mut tree = DecisionTree { features: features.to_vec(), n_events, nodes: Vec::new() };
    let g: Vec<&Sample> = growing.iter().collect();
    let h: Vec<&Sample> = heldout.iter().collect();
    tree.grow(None, g, h, config);
    for node in &mut tree.nodes {
        node.dist = rel_freq(&node.growing_counts);
        if node.dist.iter().all(|&p| p == 0.0) {
            node.dist = vec![1.0 / n_events as f64; n_events];
        }
    }
    tree
}

impl DecisionTree {
    fn grow(&mut self, parent: Option<usize>, g: Vec<&Sample>, h: Vec<&Sample>, config: &GrowConfig) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            parent,
            split: None,
            growing_counts: event_counts(&g, self.n_events),
            heldout_counts: event_counts(&h, self.n_events),
            dist: Vec::new(),
            lambda: 0.5,
        });
        if g.len() < config.min_size {
            return id;
        }
        let Some(found) = find_best_pylon(&self.features, self.n_events, &g, &h, config) else { return id };
        if found.growing_gain < config.epsilon || found.heldout_gain < config.epsilon {
            return id;
        }
        let (gy, gn): (Vec<&Sample>, Vec<&Sample>) = g.into_iter().partition(|s| found.pylon.answer(&s.values));
        let (hy, hn): (Vec<&Sample>, Vec<&Sample>) = h.into_iter().partition(|s| found.pylon.answer(&s.values));
        let yes = self.grow(Some(id), gy, hy, config);
        let no = self.grow(Some(id), gn, hn, config);
        self.nodes[id].split = Some(Split {
            pylon: found.pylon,
            yes,
            no,
            growing_gain: found.growing_gain,
            heldout_gain: found.heldout_gain,
        });
        id
    }

    /// Node ids from the root to the leaf `values` reaches.
    pub fn path(&self, values: &[Value]) -> Vec<usize> {
        let mut out = vec![0];
        let mut n = 0;
        while let Some(s) = &self.nodes[n].split {
            n = if s.pylon.answer(values) { s.yes } else { s.no };
            out.push(n);
        }
        out
    }

    pub fn leaf(&self, values: &[Value]) -> usize {
        *self.path(values).last().unwrap()
    }

    pub fn distribution(&self, values: &[Value]) -> &[f64] {
        &self.nodes[self.leaf(values)].dist
    }

    pub fn prob(&self, values: &[Value], event: usize) -> f64 {
        self.distribution(values)[event]
    }

    pub fn depth(&self) -> usize {
        (0..self.nodes.len())
            .map(|mut n| {
                let mut d = 0;
                while let Some(p) = self.nodes[n].parent {
                    d += 1;
                    n = p;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    /// Shared-weight bucket of each node: its own id when it sees at least
    /// `LAMBDA_MIN_EVENTS` heldout events, otherwise one bucket per
    /// power-of-two range of growing counts.
    fn lambda_buckets(&self) -> Vec<usize> {
        let n = self.nodes.len();
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let held: f64 = node.heldout_counts.iter().sum();
                if held >= LAMBDA_MIN_EVENTS {
                    i
                } else {
                    let grown: f64 = node.growing_counts.iter().sum();
                    n + (grown + 1.0).log2().floor() as usize
                }
            })
            .collect()
    }

    /// Sets every node's distribution to `λ·f + (1-λ)·parent`, the root
    /// interpolating with the uniform distribution, with weights estimated
    /// by EM on `heldout`. Returns the heldout log-likelihood before each
    /// iteration and after the last.
    pub fn smooth(&mut self, heldout: &[Sample]) -> Vec<f64> {
        let freqs: Vec<Vec<f64>> = self.nodes.iter().map(|n| rel_freq(&n.growing_counts)).collect();
        if heldout.is_empty() {
            for node in &mut self.nodes {
                node.lambda = 0.5;
            }
            self.recompute(&freqs);
            return Vec::new();
        }
        let paths: Vec<(Vec<usize>, usize)> = heldout.iter().map(|s| (self.path(&s.values), s.event)).collect();
        let buckets = self.lambda_buckets();
        let mut lambdas: BTreeMap<usize, f64> = buckets.iter().map(|&b| (b, 0.5)).collect();
        let u = 1.0 / self.n_events as f64;
        let mut history = Vec::new();
        for iter in 0..=100 {
            let mut used: BTreeMap<usize, f64> = BTreeMap::new();
            let mut reached: BTreeMap<usize, f64> = BTreeMap::new();
            let mut ll = 0.0;
            for (path, e) in &paths {
                let lam: Vec<f64> = path.iter().map(|&k| lambdas[&buckets[k]]).collect();
                // w[k]: mass contributed by node k along the path, deepest last.
                let mut w = vec![0.0; path.len()];
                let mut keep = 1.0;
                for k in (0..path.len()).rev() {
                    w[k] = keep * lam[k] * freqs[path[k]][*e];
                    keep *= 1.0 - lam[k];
                }
                let wu = keep * u;
                let total: f64 = w.iter().sum::<f64>() + wu;
                ll += total.ln();
                let mut above = wu;
                for k in 0..path.len() {
                    above += w[k];
                    *used.entry(buckets[path[k]]).or_insert(0.0) += w[k] / total;
                    *reached.entry(buckets[path[k]]).or_insert(0.0) += above / total;
                }
            }
            history.push(ll);
            if iter == 100 {
                break;
            }
            let mut change: f64 = 0.0;
            for (b, l) in lambdas.iter_mut() {
                if let Some(&r) = reached.get(b).filter(|&&r| r > 0.0) {
                    let new = (used[b] / r).min(MAX_LAMBDA);
                    change = change.max((new - *l).abs());
                    *l = new;
                }
            }
            if change < 1e-6 {
                break;
            }
        }
        for (i, node) in self.nodes.iter_mut().enumerate() {
            node.lambda = lambdas[&buckets[i]];
        }
        self.recompute(&freqs);
        history
    }

    fn recompute(&mut self, freqs: &[Vec<f64>]) {
        let u = 1.0 / self.n_events as f64;
        // Parents always precede children in `nodes`.
        for i in 0..self.nodes.len() {
            let parent: Vec<f64> = match self.nodes[i].parent {
                Some(p) => self.nodes[p].dist.clone(),
                None => vec![u; self.n_events],
            };
            if freqs[i].iter().all(|&f| f == 0.0) {
                self.nodes[i].dist = parent;
                continue;
            }
            let l = self.nodes[i].lambda;
            self.nodes[i].dist = freqs[i].iter().zip(&parent).map(|(f, p)| l * f + (1.0 - l) * p).collect();
        }
    }

    /// Where an event was seen in a node's growing data but not its heldout
    /// data, or the reverse, the node and its descendants take the parent's
    /// probability for it; each node is then renormalized.
    pub fn propagate_unreliable(&mut self) {
        let mut inherited: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.nodes.len()];
        for i in 0..self.nodes.len() {
            let Some(p) = self.nodes[i].parent else { continue };
            let mut bad = inherited[p].clone();
            for e in 0..self.n_events {
                if (self.nodes[i].growing_counts[e] > 0.0) != (self.nodes[i].heldout_counts[e] > 0.0) {
                    bad.insert(e);
                }
            }
            let parent = self.nodes[p].dist.clone();
            let dist = &mut self.nodes[i].dist;
            for &e in &bad {
                dist[e] = parent[e];
            }
            let z: f64 = dist.iter().sum();
            if z > 0.0 {
                dist.iter_mut().for_each(|x| *x /= z);
            }
            inherited[i] = bad;
        }
    }

    /// True if every bit question asks the next unpinned bit of its feature
    /// and every feature prerequisite was fully pinned, given the growing data.
    pub fn respects_question_order(&self, growing: &[Sample]) -> bool {
        let mut at: Vec<Vec<&Sample>> = vec![Vec::new(); self.nodes.len()];
        at[0] = growing.iter().collect();
        for i in 0..self.nodes.len() {
            let Some(split) = &self.nodes[i].split else { continue };
            let here = std::mem::take(&mut at[i]);
            for (_, q) in &split.pylon.steps {
                if let Some(r) = self.features[q.feature()].requires {
                    if !pinned(&here, r).1 {
                        return false;
                    }
                }
                if let Question::Bit { feature, bit } = q {
                    if pinned(&here, *feature).0 != *bit {
                        return false;
                    }
                }
            }
            let (y, n): (Vec<&Sample>, Vec<&Sample>) = here.into_iter().partition(|s| split.pylon.answer(&s.values));
            at[split.yes] = y;
            at[split.no] = n;
        }
        true
    }
}

/// Word tree for one POS tag: events are the tag's known words plus
/// `<low>`, whose mass is shared among the low-occurring words and the
/// unknown word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalTree {
    pub tree: DecisionTree,
    /// Event id of each known word.
    pub words: BTreeMap<String, usize>,
    pub low_event: Option<usize>,
    /// Counts of the words grouped into `<low>`.
    pub low_words: BTreeMap<String, u64>,
}

impl LexicalTree {
    fn low_mass(&self) -> (f64, f64) {
        let total: u64 = self.low_words.values().sum();
        let singletons = self.low_words.values().filter(|&&c| c == 1).count() as u64;
        (total as f64, singletons as f64)
    }

    /// Unnormalized `Pr_L(word) = c(word)/c(low) · Pr(low)`.
    pub fn prob_low_raw(&self, values: &[Value], word: &str) -> f64 {
        match (self.low_event, self.low_words.get(word)) {
            (Some(e), Some(&c)) => c as f64 / self.low_mass().0 * self.tree.prob(values, e),
            _ => 0.0,
        }
    }

    /// Unnormalized `Pr_U = c(singletons)/c(low) · Pr(low)`.
    pub fn prob_unknown_raw(&self, values: &[Value]) -> f64 {
        match self.low_event {
            Some(e) => {
                let (total, single) = self.low_mass();
                single / total * self.tree.prob(values, e)
            }
            None => 0.0,
        }
    }

    fn z(&self, values: &[Value]) -> f64 {
        1.0 + self.prob_unknown_raw(values)
    }

    /// Normalized probability of `word`; `None` stands for an unknown word.
    pub fn prob(&self, values: &[Value], word: Option<&str>) -> f64 {
        let raw = match word {
            None => self.prob_unknown_raw(values),
            Some(w) => match self.words.get(w) {
                Some(&e) => self.tree.prob(values, e),
                None if self.low_words.contains_key(w) => self.prob_low_raw(values, w),
                None => self.prob_unknown_raw(values),
            },
        };
        raw / self.z(values)
    }

    /// Whether the word was seen with this tag in training.
    pub fn knows(&self, word: &str) -> bool {
        self.words.contains_key(word) || self.low_words.contains_key(word)
    }

    pub fn admits_unknown(&self) -> bool {
        self.low_words.values().any(|&c| c == 1)
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &DecisionTree, n: usize, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let node = &t.nodes[n];
            let pad = "  ".repeat(depth);
            let count: f64 = node.growing_counts.iter().sum();
            match &node.split {
                Some(s) => {
                    writeln!(f, "{pad}node {n} n={count} lambda={:.4} {}", node.lambda, s.pylon.describe(&t.features))?;
                    go(t, s.yes, depth + 1, f)?;
                    go(t, s.no, depth + 1, f)
                }
                None => writeln!(f, "{pad}leaf {n} n={count} lambda={:.4}", node.lambda),
            }
        }
        go(self, 0, 0, f)
    }
}
