//! Baseline word models: Katz backoff with Good-Turing discounting,
//! count-bucketed linear interpolation trained by EM, and class n-grams.

use crate::eval::PerplexityAccumulator;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

/// Out-of-vocabulary word.
pub const UNK: &str = "<unk>";
/// Sentence-start padding.
pub const BOS: &str = "<s>";
/// Counts below this are Good-Turing discounted.
pub const GT_CUTOFF: u64 = 5;

type Gram = Vec<String>;

/// N-gram counts for orders `1..=order`; sentences are left-padded with `<s>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramCounts {
    pub order: usize,
    /// `grams[n - 1]` maps each n-gram (context then word) to its count.
    pub grams: Vec<BTreeMap<Gram, u64>>,
    pub vocab: BTreeSet<String>,
}

impl NgramCounts {
    pub fn from_sentences<S: AsRef<str>>(sentences: &[Vec<S>], order: usize) -> Self {
        assert!(order >= 1);
        let mut grams = vec![BTreeMap::new(); order];
        let mut vocab = BTreeSet::new();
        for s in sentences {
            let mut padded: Vec<String> = vec![BOS.to_string(); order - 1];
            padded.extend(s.iter().map(|w| w.as_ref().to_string()));
            for i in order - 1..padded.len() {
                vocab.insert(padded[i].clone());
                for n in 1..=order {
                    *grams[n - 1].entry(padded[i + 1 - n..=i].to_vec()).or_insert(0) += 1;
                }
            }
        }
        NgramCounts { order, grams, vocab }
    }

    /// Number of n-grams of order `n` seen exactly `r` times, keyed by `r`.
    pub fn count_of_counts(&self, n: usize) -> BTreeMap<u64, u64> {
        let mut out = BTreeMap::new();
        for &c in self.grams[n - 1].values() {
            *out.entry(c).or_insert(0) += 1;
        }
        out
    }

    /// Per context of length `n - 1`: raw and discounted totals of its followers.
    fn context_totals(&self, n: usize, discounted: &BTreeMap<Gram, f64>) -> BTreeMap<Gram, (u64, f64)> {
        let mut out: BTreeMap<Gram, (u64, f64)> = BTreeMap::new();
        for (g, &c) in &self.grams[n - 1] {
            let e = out.entry(g[..n - 1].to_vec()).or_insert((0, 0.0));
            e.0 += c;
            e.1 += discounted[g];
        }
        out
    }
}

/// Good-Turing corrected count `r* = (r+1) n_{r+1} / n_r` for `r < k`.
/// The raw count is kept when `n_r` or `n_{r+1}` is zero, or when the
/// estimate would not be a discount.
pub fn gt_discount(r: u64, count_of_counts: &BTreeMap<u64, u64>, k: u64) -> f64 {
    if r == 0 || r >= k {
        return r as f64;
    }
    let nr = count_of_counts.get(&r).copied().unwrap_or(0);
    let nr1 = count_of_counts.get(&(r + 1)).copied().unwrap_or(0);
    if nr == 0 || nr1 == 0 {
        return r as f64;
    }
    let star = (r + 1) as f64 * nr1 as f64 / nr as f64;
    if star > 0.0 && star <= r as f64 {
        star
    } else {
        r as f64
    }
}

/// Discounted counts of every n-gram of order `n`.
pub fn good_turing(counts: &NgramCounts, n: usize) -> BTreeMap<Gram, f64> {
    let coc = counts.count_of_counts(n);
    counts.grams[n - 1]
        .iter()
        .map(|(g, &c)| (g.clone(), gt_discount(c, &coc, GT_CUTOFF)))
        .collect()
}

/// Katz backoff model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackoffModel {
    pub order: usize,
    pub vocab: BTreeSet<String>,
    /// `probs[n - 1]`: discounted probability of each seen n-gram.
    pub probs: Vec<BTreeMap<Gram, f64>>,
    /// `alphas[n - 1]`: backoff weight of each seen context of length `n`.
    pub alphas: Vec<BTreeMap<Gram, f64>>,
    /// Uniform share of the unigram leftover mass given to every word and `<unk>`.
    pub unigram_floor: f64,
}

impl BackoffModel {
    pub fn build(counts: &NgramCounts) -> Self {
        let order = counts.order;
        let mut probs = vec![BTreeMap::new(); order];

        let uni = good_turing(counts, 1);
        let total: u64 = counts.grams[0].values().sum();
        let star_sum: f64 = uni.values().sum();
        let mut leftover = 1.0 - star_sum / total.max(1) as f64;
        if leftover <= 1e-12 {
            leftover = 1.0 / (total + 1) as f64;
        }
        let v = counts.vocab.len() + 1;
        let unigram_floor = leftover / v as f64;
        for (g, &s) in &uni {
            probs[0].insert(g.clone(), (1.0 - leftover) * s / star_sum + unigram_floor);
        }

        let alphas = vec![BTreeMap::new(); order - 1];
        let mut model = BackoffModel { order, vocab: counts.vocab.clone(), probs, alphas, unigram_floor };
        for n in 2..=order {
            let disc = good_turing(counts, n);
            let totals = counts.context_totals(n, &disc);
            let mut level = BTreeMap::new();
            let mut weights = BTreeMap::new();
            for (ctx, &(c, star_sum)) in &totals {
                let seen: Vec<&Gram> = counts.grams[n - 1].range(ctx_range(ctx)).map(|(g, _)| g).collect();
                let beta = 1.0 - star_sum / c as f64;
                let lower_seen: f64 = seen.iter().map(|g| model.prob_ids(&g[1..n - 1], &g[n - 1])).sum();
                let denom = 1.0 - lower_seen;
                if beta > 1e-12 && denom > 1e-12 {
                    for g in &seen {
                        level.insert((*g).clone(), disc[*g] / c as f64);
                    }
                    weights.insert(ctx.clone(), beta / denom);
                } else {
                    for g in &seen {
                        level.insert((*g).clone(), disc[*g] / star_sum);
                    }
                    weights.insert(ctx.clone(), 0.0);
                }
            }
            model.probs[n - 1] = level;
            model.alphas[n - 2] = weights;
        }
        model
    }

    fn map_word<'a>(&self, w: &'a str) -> &'a str {
        if self.vocab.contains(w) {
            w
        } else {
            UNK
        }
    }

    fn prob_ids(&self, ctx: &[String], w: &str) -> f64 {
        if ctx.is_empty() {
            let key = vec![w.to_string()];
            return self.probs[0].get(&key).copied().unwrap_or(self.unigram_floor);
        }
        let n = ctx.len() + 1;
        let mut key = ctx.to_vec();
        key.push(w.to_string());
        if let Some(&p) = self.probs[n - 1].get(&key) {
            return p;
        }
        match self.alphas[n - 2].get(ctx) {
            Some(0.0) => 0.0,
            Some(&a) => a * self.prob_ids(&ctx[1..], w),
            None => self.prob_ids(&ctx[1..], w),
        }
    }

    /// `Pr(word | context)`; only the last `order - 1` context words are used
    /// and missing history is padded with `<s>`.
    pub fn prob<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let ctx = self.history(context);
        self.prob_ids(&ctx, self.map_word(word))
    }

    fn history<S: AsRef<str>>(&self, context: &[S]) -> Vec<String> {
        let k = self.order - 1;
        let mut ctx: Vec<String> = context
            .iter()
            .rev()
            .take(k)
            .map(|w| {
                let w = w.as_ref();
                if w == BOS {
                    BOS.to_string()
                } else {
                    self.map_word(w).to_string()
                }
            })
            .collect();
        ctx.resize(k, BOS.to_string());
        ctx.reverse();
        ctx
    }

    /// Predicted vocabulary: every training word plus `<unk>`.
    pub fn outcomes(&self) -> Vec<String> {
        self.vocab.iter().cloned().chain(std::iter::once(UNK.to_string())).collect()
    }

    pub fn perplexity<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> PerplexityAccumulator {
        let mut acc = PerplexityAccumulator::default();
        for s in sentences {
            for i in 0..s.len() {
                acc.add_prob(self.prob(&s[..i], s[i].as_ref()));
            }
        }
        acc
    }

    /// ARPA text export with log10 probabilities and backoff weights.
    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        let uni: Vec<(String, f64)> = self
            .outcomes()
            .into_iter()
            .map(|w| {
                let p = self.prob_ids(&[], &w);
                (w, p)
            })
            .collect();
        let _ = writeln!(out, "ngram 1={}", uni.len() + usize::from(self.order > 1));
        for n in 2..=self.order {
            let _ = writeln!(out, "ngram {n}={}", self.probs[n - 1].len());
        }
        let bow = |g: &Gram| -> Option<f64> {
            self.alphas.get(g.len().wrapping_sub(1)).and_then(|a| a.get(g)).map(|&a| a.max(1e-99).log10())
        };
        let _ = write!(out, "\n\\1-grams:\n");
        if self.order > 1 {
            let g = vec![BOS.to_string()];
            let _ = writeln!(out, "-99\t{BOS}\t{:.6}", bow(&g).unwrap_or(0.0));
        }
        for (w, p) in uni {
            let g = vec![w.clone()];
            match bow(&g).filter(|_| self.order > 1) {
                Some(b) => writeln!(out, "{:.6}\t{w}\t{b:.6}", p.log10()),
                None => writeln!(out, "{:.6}\t{w}", p.log10()),
            }
            .unwrap();
        }
        for n in 2..=self.order {
            let _ = write!(out, "\n\\{n}-grams:\n");
            for (g, &p) in &self.probs[n - 1] {
                let text = g.join(" ");
                match bow(g).filter(|_| n < self.order) {
                    Some(b) => writeln!(out, "{:.6}\t{text}\t{b:.6}", p.max(1e-99).log10()),
                    None => writeln!(out, "{:.6}\t{text}", p.max(1e-99).log10()),
                }
                .unwrap();
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }
}

fn ctx_range(ctx: &Gram) -> impl std::ops::RangeBounds<Gram> {
    let lo = ctx.clone();
    let mut hi = ctx.clone();
    // Every key extending `ctx` by one word sorts between these bounds.
    hi.push(String::from("\u{10FFFF}"));
    lo..hi
}

/// Count bucket used to tie interpolation weights: 0, 1, 2, 3-4, 5-8, ...
pub fn count_bucket(c: u64) -> usize {
    if c == 0 {
        0
    } else {
        1 + (64 - (c - 1).leading_zeros()) as usize
    }
}

/// One heldout event for interpolation: the component probabilities and the
/// bucket whose weights apply.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpEvent {
    pub probs: Vec<f64>,
    pub bucket: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    /// `lambdas[bucket][component]`.
    pub lambdas: Vec<Vec<f64>>,
    /// Heldout log-likelihood (natural log) before each iteration and after the last.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
}

fn em_log_likelihood(events: &[InterpEvent], lambdas: &[Vec<f64>]) -> f64 {
    events
        .iter()
        .map(|e| e.probs.iter().zip(&lambdas[e.bucket]).map(|(p, l)| p * l).sum::<f64>().ln())
        .sum()
}

/// Estimates per-bucket interpolation weights by EM, starting from uniform
/// weights. Stops when no weight moves by more than `tol` or after
/// `max_iter` iterations.
pub fn interpolate_em(
    events: &[InterpEvent],
    components: usize,
    buckets: usize,
    max_iter: usize,
    tol: f64,
) -> EmResult {
    let mut lambdas = vec![vec![1.0 / components as f64; components]; buckets];
    let mut ll = vec![em_log_likelihood(events, &lambdas)];
    let mut iterations = 0;
    for _ in 0..max_iter {
        let mut acc = vec![vec![0.0; components]; buckets];
        let mut n = vec![0usize; buckets];
        for e in events {
            let lam = &lambdas[e.bucket];
            let mix: f64 = e.probs.iter().zip(lam).map(|(p, l)| p * l).sum();
            if mix <= 0.0 {
                continue;
            }
            n[e.bucket] += 1;
            for j in 0..components {
                acc[e.bucket][j] += lam[j] * e.probs[j] / mix;
            }
        }
        let mut change: f64 = 0.0;
        for b in 0..buckets {
            if n[b] == 0 {
                continue;
            }
            for j in 0..components {
                let new = acc[b][j] / n[b] as f64;
                change = change.max((new - lambdas[b][j]).abs());
                lambdas[b][j] = new;
            }
        }
        iterations += 1;
        ll.push(em_log_likelihood(events, &lambdas));
        if change < tol {
            break;
        }
    }
    EmResult { lambdas, log_likelihood: ll, iterations }
}

/// Linear interpolation of maximum-likelihood estimates of orders 0 (uniform)
/// through `order`, with weights tied by the count of the longest context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedModel {
    pub counts: NgramCounts,
    pub lambdas: Vec<Vec<f64>>,
}

impl InterpolatedModel {
    pub fn train<S: AsRef<str>>(growing: &[Vec<S>], heldout: &[Vec<S>], order: usize) -> Self {
        let counts = NgramCounts::from_sentences(growing, order);
        let mut model = InterpolatedModel { counts, lambdas: vec![vec![1.0 / (order + 1) as f64; order + 1]; 1] };
        let mut events = Vec::new();
        for s in heldout {
            for i in 0..s.len() {
                let h = model.history(&s[..i]);
                let w = model.map_word(s[i].as_ref());
                events.push(InterpEvent { probs: model.components(&h, &w), bucket: model.bucket(&h) });
            }
        }
        let buckets = events.iter().map(|e| e.bucket + 1).max().unwrap_or(1).max(count_bucket(u64::MAX) + 1);
        model.lambdas = interpolate_em(&events, order + 1, buckets, 100, 1e-6).lambdas;
        model
    }

    fn map_word(&self, w: &str) -> String {
        if self.counts.vocab.contains(w) { w.to_string() } else { UNK.to_string() }
    }

    fn history<S: AsRef<str>>(&self, context: &[S]) -> Vec<String> {
        let k = self.counts.order - 1;
        let mut ctx: Vec<String> = context.iter().rev().take(k).map(|w| self.map_word(w.as_ref())).collect();
        ctx.resize(k, BOS.to_string());
        ctx.reverse();
        ctx
    }

    fn context_count(&self, ctx: &[String]) -> u64 {
        if ctx.is_empty() {
            return self.counts.grams[0].values().sum();
        }
        let key = ctx.to_vec();
        self.counts.grams[ctx.len()].range(ctx_range(&key)).map(|(_, &c)| c).sum()
    }

    fn bucket(&self, h: &[String]) -> usize {
        count_bucket(self.context_count(h))
    }

    /// Component distributions; an unseen context falls back to the next
    /// lower order so each component stays normalized.
    fn components(&self, h: &[String], w: &str) -> Vec<f64> {
        let v = (self.counts.vocab.len() + 1) as f64;
        let mut out = vec![1.0 / v];
        for n in 1..=self.counts.order {
            let ctx = &h[h.len() - (n - 1)..];
            let c = self.context_count(ctx);
            let p = if c == 0 {
                *out.last().unwrap()
            } else {
                let mut key = ctx.to_vec();
                key.push(w.to_string());
                self.counts.grams[n - 1].get(&key).copied().unwrap_or(0) as f64 / c as f64
            };
            out.push(p);
        }
        out
    }

    pub fn prob<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let h = self.history(context);
        let w = self.map_word(word);
        let b = self.bucket(&h).min(self.lambdas.len() - 1);
        self.components(&h, &w).iter().zip(&self.lambdas[b]).map(|(p, l)| p * l).sum()
    }

    pub fn outcomes(&self) -> Vec<String> {
        self.counts.vocab.iter().cloned().chain(std::iter::once(UNK.to_string())).collect()
    }
}

/// Class n-gram: `Pr(w | g(w)) · Pr(g(w) | class history)`. Words outside
/// the class map are scored with the class model's unknown mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassNgramModel {
    pub class_of: BTreeMap<String, String>,
    pub classes: BackoffModel,
    pub emission: BTreeMap<String, f64>,
}

impl ClassNgramModel {
    pub fn train<S: AsRef<str>>(sentences: &[Vec<S>], class_of: &BTreeMap<String, String>, order: usize) -> Self {
        let mut word_counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut class_counts: BTreeMap<String, u64> = BTreeMap::new();
        let class_sents: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|w| {
                        let w = w.as_ref();
                        let g = class_of.get(w).cloned().unwrap_or_else(|| UNK.to_string());
                        if g != UNK {
                            *word_counts.entry(w.to_string()).or_insert(0) += 1;
                            *class_counts.entry(g.clone()).or_insert(0) += 1;
                        }
                        g
                    })
                    .collect()
            })
            .collect();
        let classes = BackoffModel::build(&NgramCounts::from_sentences(&class_sents, order));
        let emission = word_counts
            .iter()
            .map(|(w, &c)| (w.clone(), c as f64 / class_counts[&class_of[w]] as f64))
            .collect();
        ClassNgramModel { class_of: class_of.clone(), classes, emission }
    }

    pub fn prob<S: AsRef<str>>(&self, context: &[S], word: &str) -> f64 {
        let hist: Vec<String> = context
            .iter()
            .map(|w| self.class_of.get(w.as_ref()).cloned().unwrap_or_else(|| UNK.to_string()))
            .collect();
        match (self.class_of.get(word), self.emission.get(word)) {
            (Some(g), Some(&e)) => e * self.classes.prob(&hist, g),
            _ => self.classes.prob(&hist, UNK),
        }
    }

    pub fn outcomes(&self) -> Vec<String> {
        self.emission.keys().cloned().chain(std::iter::once(UNK.to_string())).collect()
    }
}
