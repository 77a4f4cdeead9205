//! Greedy mutual-information clustering into binary class trees, and the
//! bit codes that decision trees ask questions about.

use crate::tags::{TURN, UTTERANCE_TAGS};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Leaf that collects a tag's low-occurring words.
pub const LOW: &str = "<low>";

/// Losses closer than this are treated as ties.
const TIE_EPS: f64 = 1e-10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("class tree has no TURN leaf")]
    MissingTurn,
    #[error("class tree already contains utterance tags")]
    AlreadyExtended,
    #[error("class tree text, line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Path from the root of a class tree; `false` is the top branch.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct BitCode(Arc<[bool]>);

impl BitCode {
    pub fn new(bits: Vec<bool>) -> Self {
        BitCode(bits.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn common_prefix(&self, other: &BitCode) -> usize {
        self.0.iter().zip(other.0.iter()).take_while(|(a, b)| a == b).count()
    }
}

impl fmt::Debug for BitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitCode({self})")
    }
}

impl fmt::Display for BitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in self.0.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassNode {
    Leaf { item: String, count: u64 },
    Branch(Box<ClassNode>, Box<ClassNode>),
}

impl ClassNode {
    fn leaf(item: &str, count: u64) -> Self {
        ClassNode::Leaf { item: item.to_string(), count }
    }

    fn branch(a: ClassNode, b: ClassNode) -> Self {
        ClassNode::Branch(Box::new(a), Box::new(b))
    }

    fn walk<'a>(&'a self, path: &mut Vec<bool>, f: &mut impl FnMut(&'a str, u64, &[bool])) {
        match self {
            ClassNode::Leaf { item, count } => f(item, *count, path),
            ClassNode::Branch(a, b) => {
                path.push(false);
                a.walk(path, f);
                path.pop();
                path.push(true);
                b.walk(path, f);
                path.pop();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTree {
    pub root: ClassNode,
}

impl ClassTree {
    /// Items with their counts, top to bottom.
    pub fn leaves(&self) -> Vec<(String, u64)> {
        let mut out = Vec::new();
        self.root.walk(&mut Vec::new(), &mut |item, count, _| out.push((item.to_string(), count)));
        out
    }

    pub fn codes(&self) -> BTreeMap<String, BitCode> {
        let mut out = BTreeMap::new();
        self.root.walk(&mut Vec::new(), &mut |item, _, path| {
            out.insert(item.to_string(), BitCode::new(path.to_vec()));
        });
        out
    }

    pub fn code(&self, item: &str) -> Option<BitCode> {
        self.codes().remove(item)
    }

    pub fn depth(&self) -> usize {
        let mut d = 0;
        self.root.walk(&mut Vec::new(), &mut |_, _, path| d = d.max(path.len()));
        d
    }

    /// Text form: `(<depth>` opens a branch, `)` closes it, and each item is
    /// a `leaf <item> <count>` line.
    pub fn to_text(&self) -> String {
        fn go(node: &ClassNode, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match node {
                ClassNode::Leaf { item, count } => out.push_str(&format!("{pad}leaf {item} {count}\n")),
                ClassNode::Branch(a, b) => {
                    out.push_str(&format!("{pad}({depth}\n"));
                    go(a, depth + 1, out);
                    go(b, depth + 1, out);
                    out.push_str(&format!("{pad})\n"));
                }
            }
        }
        let mut out = String::new();
        go(&self.root, 0, &mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ClusterError> {
        let mut stack: Vec<Vec<ClassNode>> = vec![Vec::new()];
        let err = |line: usize, message: &str| ClusterError::Parse { line, message: message.to_string() };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('(') {
                stack.push(Vec::new());
            } else if line == ")" {
                let kids = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| err(i + 1, "unbalanced ')'"))?;
                let [a, b]: [ClassNode; 2] = kids.try_into().map_err(|_| err(i + 1, "branch needs two children"))?;
                stack.last_mut().unwrap().push(ClassNode::branch(a, b));
            } else {
                let parts: Vec<&str> = line.split_whitespace().collect();
                match parts.as_slice() {
                    ["leaf", item, count] => {
                        let count = count.parse().map_err(|_| err(i + 1, "bad count"))?;
                        stack.last_mut().unwrap().push(ClassNode::leaf(item, count));
                    }
                    _ => return Err(err(i + 1, "expected a leaf line")),
                }
            }
        }
        match (stack.len(), stack.pop()) {
            (1, Some(mut top)) if top.len() == 1 => Ok(ClassTree { root: top.pop().unwrap() }),
            _ => Err(err(text.lines().count(), "expected exactly one root")),
        }
    }
}

/// Adjacent-item counts over a set of item sequences.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AdjacencyCounts {
    pub items: Vec<String>,
    pub unigram: Vec<u64>,
    pub bigram: BTreeMap<(usize, usize), u64>,
}

impl AdjacencyCounts {
    pub fn from_sequences<S: AsRef<str>>(sequences: &[Vec<S>]) -> Self {
        // Items are numbered in sorted order so results do not depend on input order.
        let items: Vec<String> = sequences
            .iter()
            .flatten()
            .map(|w| w.as_ref().to_string())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let id: BTreeMap<&str, usize> = items.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
        let mut unigram = vec![0; items.len()];
        let mut bigram = BTreeMap::new();
        for s in sequences {
            for (k, w) in s.iter().enumerate() {
                let a = id[w.as_ref()];
                unigram[a] += 1;
                if let Some(next) = s.get(k + 1) {
                    *bigram.entry((a, id[next.as_ref()])).or_insert(0) += 1;
                }
            }
        }
        AdjacencyCounts { items, unigram, bigram }
    }
}

fn mi_term(n: f64, l: f64, r: f64, total: f64) -> f64 {
    if n <= 0.0 {
        0.0
    } else {
        n / total * (n * total / (l * r)).log2()
    }
}

/// Average mutual information (bits) between adjacent classes.
pub fn mutual_information(counts: &AdjacencyCounts) -> f64 {
    let n = counts.items.len();
    let (mut left, mut right) = (vec![0.0; n], vec![0.0; n]);
    let mut total = 0.0;
    for (&(a, b), &c) in &counts.bigram {
        left[a] += c as f64;
        right[b] += c as f64;
        total += c as f64;
    }
    counts
        .bigram
        .iter()
        .map(|(&(a, b), &c)| mi_term(c as f64, left[a], right[b], total))
        .sum()
}

/// One greedy merge: the keys (smallest member item) of the merged classes
/// and the mutual information lost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub first: String,
    pub second: String,
    pub loss: f64,
}

struct Engine {
    n: Vec<Vec<f64>>,
    left: Vec<f64>,
    right: Vec<f64>,
    total: f64,
    active: Vec<bool>,
    group: Vec<usize>,
    key: Vec<String>,
    node: Vec<Option<ClassNode>>,
    row_mi: Vec<f64>,
    col_mi: Vec<f64>,
}

impl Engine {
    fn new(counts: &AdjacencyCounts, group: Vec<usize>) -> Self {
        let c = counts.items.len();
        let mut n = vec![vec![0.0; c]; c];
        for (&(a, b), &v) in &counts.bigram {
            n[a][b] += v as f64;
        }
        let mut e = Engine {
            n,
            left: vec![0.0; c],
            right: vec![0.0; c],
            total: 0.0,
            active: vec![true; c],
            group,
            key: counts.items.clone(),
            node: counts.items.iter().zip(&counts.unigram).map(|(w, &k)| Some(ClassNode::leaf(w, k))).collect(),
            row_mi: vec![0.0; c],
            col_mi: vec![0.0; c],
        };
        e.refresh();
        e
    }

    fn q(&self, a: usize, b: usize) -> f64 {
        mi_term(self.n[a][b], self.left[a], self.right[b], self.total)
    }

    fn refresh(&mut self) {
        let c = self.n.len();
        self.total = self.n.iter().flatten().sum();
        for a in 0..c {
            self.left[a] = self.n[a].iter().sum();
            self.right[a] = (0..c).map(|l| self.n[l][a]).sum();
        }
        for a in 0..c {
            self.row_mi[a] = (0..c).map(|r| self.q(a, r)).sum();
            self.col_mi[a] = (0..c).map(|l| self.q(l, a)).sum();
        }
    }

    fn loss(&self, a: usize, b: usize) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let before = self.row_mi[a] + self.row_mi[b] + self.col_mi[a] + self.col_mi[b]
            - self.q(a, a)
            - self.q(a, b)
            - self.q(b, a)
            - self.q(b, b);
        let (lm, rm) = (self.left[a] + self.left[b], self.right[a] + self.right[b]);
        let mut after = mi_term(
            self.n[a][a] + self.n[a][b] + self.n[b][a] + self.n[b][b],
            lm,
            rm,
            self.total,
        );
        for k in 0..self.n.len() {
            if !self.active[k] || k == a || k == b {
                continue;
            }
            after += mi_term(self.n[a][k] + self.n[b][k], lm, self.right[k], self.total);
            after += mi_term(self.n[k][a] + self.n[k][b], self.left[k], rm, self.total);
        }
        before - after
    }

    fn best_pair(&self) -> Option<(usize, usize, f64)> {
        let live: Vec<usize> = (0..self.n.len()).filter(|&k| self.active[k]).collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, &a) in live.iter().enumerate() {
            for &b in &live[i + 1..] {
                if self.group[a] != self.group[b] {
                    continue;
                }
                let (a, b) = if self.key[a] <= self.key[b] { (a, b) } else { (b, a) };
                let loss = self.loss(a, b);
                let better = match best {
                    None => true,
                    Some((ba, bb, bl)) => {
                        loss < bl - TIE_EPS
                            || (loss <= bl + TIE_EPS && (&self.key[a], &self.key[b]) < (&self.key[ba], &self.key[bb]))
                    }
                };
                if better {
                    best = Some((a, b, loss));
                }
            }
        }
        best
    }

    fn merge(&mut self, a: usize, b: usize) {
        let c = self.n.len();
        for r in 0..c {
            self.n[a][r] += self.n[b][r];
            self.n[b][r] = 0.0;
        }
        for l in 0..c {
            self.n[l][a] += self.n[l][b];
            self.n[l][b] = 0.0;
        }
        self.active[b] = false;
        let (na, nb) = (self.node[a].take().unwrap(), self.node[b].take().unwrap());
        self.node[a] = Some(ClassNode::branch(na, nb));
        self.refresh();
    }

    /// Merges until every group holds one class; returns the history.
    fn run(&mut self) -> Vec<Merge> {
        let mut history = Vec::new();
        while let Some((a, b, loss)) = self.best_pair() {
            history.push(Merge { first: self.key[a].clone(), second: self.key[b].clone(), loss });
            self.merge(a, b);
        }
        history
    }

    /// Remaining class of each group.
    fn roots(&mut self) -> BTreeMap<usize, ClassNode> {
        (0..self.n.len())
            .filter(|&k| self.active[k])
            .map(|k| (self.group[k], self.node[k].take().unwrap()))
            .collect()
    }
}

/// Result of a clustering run: the tree and the merge order that built it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub tree: Option<ClassTree>,
    pub merges: Vec<Merge>,
}

/// Clusters items greedily, always merging the pair that loses the least
/// mutual information. Ties go to the lexicographically smallest pair of
/// class keys, and the class with the smaller key becomes the top branch.
pub fn cluster_items(counts: &AdjacencyCounts) -> Clustering {
    let mut engine = Engine::new(counts, vec![0; counts.items.len()]);
    let merges = engine.run();
    let tree = engine.roots().into_values().next().map(|root| ClassTree { root });
    Clustering { tree, merges }
}

/// POS classification tree from tag sequences.
pub fn cluster_pos_tags<S: AsRef<str>>(sequences: &[Vec<S>]) -> Option<ClassTree> {
    cluster_items(&AdjacencyCounts::from_sequences(sequences)).tree
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordMode {
    /// One tree per POS tag over the words seen with it.
    ForcePos,
    /// One tree over all words.
    IgnorePos,
}

/// Word classification trees and the low-occurring words behind each `<low>` leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordClusters {
    pub mode: WordMode,
    /// Keyed by POS tag; `IgnorePos` uses the single key `""`.
    pub trees: BTreeMap<String, ClassTree>,
    pub low: BTreeMap<String, BTreeMap<String, u64>>,
    pub merges: Vec<Merge>,
}

/// Clusters words. Words seen at most `low_threshold` times (per POS in
/// `ForcePos` mode) are pre-grouped into a `<low>` class.
pub fn cluster_words<S: AsRef<str>>(sequences: &[Vec<(S, S)>], mode: WordMode, low_threshold: u64) -> WordClusters {
    let group_of = |pos: &str| match mode {
        WordMode::ForcePos => pos.to_string(),
        WordMode::IgnorePos => String::new(),
    };
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for s in sequences {
        for (w, p) in s {
            *counts.entry((group_of(p.as_ref()), w.as_ref().to_string())).or_insert(0) += 1;
        }
    }
    let mut low: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for ((g, w), &c) in &counts {
        if c <= low_threshold {
            low.entry(g.clone()).or_default().insert(w.clone(), c);
        }
    }
    let item = |g: &str, w: &str| {
        let w = if low.get(g).is_some_and(|m| m.contains_key(w)) { LOW } else { w };
        format!("{w}\u{1}{g}")
    };
    let item_seqs: Vec<Vec<String>> = sequences
        .iter()
        .map(|s| s.iter().map(|(w, p)| item(&group_of(p.as_ref()), w.as_ref())).collect())
        .collect();
    let adj = AdjacencyCounts::from_sequences(&item_seqs);
    let mut groups: BTreeMap<&str, usize> = BTreeMap::new();
    let group: Vec<usize> = adj
        .items
        .iter()
        .map(|it| {
            let g = it.split('\u{1}').nth(1).unwrap();
            let next = groups.len();
            *groups.entry(g).or_insert(next)
        })
        .collect();
    let mut engine = Engine::new(&adj, group);
    let mut merges = engine.run();
    for m in &mut merges {
        m.first = m.first.split('\u{1}').next().unwrap().to_string();
        m.second = m.second.split('\u{1}').next().unwrap().to_string();
    }
    let names: BTreeMap<usize, String> = groups.iter().map(|(g, &k)| (k, g.to_string())).collect();
    let trees = engine
        .roots()
        .into_iter()
        .map(|(g, root)| (names[&g].clone(), ClassTree { root: strip_group(root) }))
        .collect();
    WordClusters { mode, trees, low, merges }
}

fn strip_group(node: ClassNode) -> ClassNode {
    match node {
        ClassNode::Leaf { item, count } => {
            ClassNode::Leaf { item: item.split('\u{1}').next().unwrap().to_string(), count }
        }
        ClassNode::Branch(a, b) => ClassNode::branch(strip_group(*a), strip_group(*b)),
    }
}

/// Replaces the `TURN` leaf with a fixed subtree over the utterance tags:
/// `((TURN TONE) ((PUSH POP) ((MOD CAN) ABR)))`.
pub fn extend_pos_tree_with_utterance_tags(tree: &ClassTree) -> Result<ClassTree, ClusterError> {
    let leaves = tree.leaves();
    if leaves.iter().any(|(i, _)| i != TURN && UTTERANCE_TAGS.contains(&i.as_str())) {
        return Err(ClusterError::AlreadyExtended);
    }
    fn go(node: &ClassNode) -> (ClassNode, bool) {
        match node {
            ClassNode::Leaf { item, count } if item == TURN => {
                let l = |t: &str| ClassNode::leaf(t, 0);
                let sub = ClassNode::branch(
                    ClassNode::branch(ClassNode::leaf(TURN, *count), l("TONE")),
                    ClassNode::branch(
                        ClassNode::branch(l("PUSH"), l("POP")),
                        ClassNode::branch(ClassNode::branch(l("MOD"), l("CAN")), l("ABR")),
                    ),
                );
                (sub, true)
            }
            ClassNode::Leaf { .. } => (node.clone(), false),
            ClassNode::Branch(a, b) => {
                let ((a, fa), (b, fb)) = (go(a), go(b));
                (ClassNode::branch(a, b), fa || fb)
            }
        }
    }
    match go(&tree.root) {
        (root, true) => Ok(ClassTree { root }),
        _ => Err(ClusterError::MissingTurn),
    }
}
