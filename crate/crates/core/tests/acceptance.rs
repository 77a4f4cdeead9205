//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

type Criterion = (&'static str, fn() -> Outcome);

mod common;

use common::worked::{cleanup_holds, correction, detection, tagset, turns};
use common::{enumerate, random_config, random_words, HashedSource, ScriptedSource};
use dialm_core::clustering::{cluster_items, cluster_words, mutual_information, AdjacencyCounts, WordMode};
use dialm_core::dtree::{grow_tree, FeatureSpec, GrowConfig, Sample, Value};
use dialm_core::eval::{ConfusionCounts, Metrics};
use dialm_core::lm::model::TrainOptions;
use dialm_core::lm::{decode_turn, expand, Decoded, LmConfig, State};
use dialm_core::ngram::{gt_discount, interpolate_em, BackoffModel, InterpEvent, NgramCounts};
use dialm_core::pipeline::{evaluate, gold_turns, train};
use dialm_core::silence::{SilenceTable, TransitionClass};
use dialm_core::synth::{generate, SynthParams};
use dialm_core::tags::Corr;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn metric_arithmetic() -> Outcome {
    let pct = |x: Option<f64>| x.map(|v| v * 100.0).unwrap_or(f64::NAN);
    let cases: [(ConfusionCounts, f64, f64, Option<f64>); 3] = [
        (ConfusionCounts::new(1447, 405, 438), 78.1, 76.8, Some(45.5)),
        (ConfusionCounts::new(301, 176, 40), 63.1, 88.3, Some(45.3)),
        // Listed as (hits, false positives, misses).
        (ConfusionCounts::new(895, 231, 187), 79.5, 82.7, None),
    ];
    for (c, r, p, e) in &cases {
        check(close(pct(c.recall()), *r, 0.1), || format!("recall {:?} for {c:?}", c.recall()))?;
        check(close(pct(c.precision()), *p, 0.1), || format!("precision {:?} for {c:?}", c.precision()))?;
        if let Some(e) = e {
            check(close(pct(c.error()), *e, 0.1), || format!("error {:?} for {c:?}", c.error()))?;
        }
    }
    Ok("3 count triples".into())
}

fn code(bits: &[u8]) -> Value {
    Value::Code(dialm_core::clustering::BitCode::new(bits.iter().map(|&b| b == 1).collect()))
}

fn random_sentences(rng: &mut ChaCha8Rng, vocab: usize, tokens: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut left = tokens;
    while left > 0 {
        let n = rng.gen_range(1..=left.min(6));
        out.push((0..n).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect());
        left -= n;
    }
    out
}

fn all_contexts(words: &[String], k: usize) -> Vec<Vec<String>> {
    let mut alphabet: Vec<String> = words.to_vec();
    alphabet.push("<s>".into());
    alphabet.push("never-seen".into());
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|c| {
                alphabet.iter().map(move |w| {
                    let mut c = c.clone();
                    c.push(w.clone());
                    c
                })
            })
            .collect();
    }
    out
}

fn normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases = 0;
    // Smoothed decision-tree nodes.
    for _ in 0..250 {
        let feats = vec![FeatureSpec::bits("a", None), FeatureSpec::bits("b", Some(0)), FeatureSpec::numeric("n")];
        let n_events = rng.gen_range(2..6);
        let mut mk = |n: usize| -> Vec<Sample> {
            (0..n)
                .map(|_| {
                    let a: Vec<u8> = (0..2).map(|_| rng.gen_range(0..2)).collect();
                    let b: Vec<u8> = (0..2).map(|_| rng.gen_range(0..2)).collect();
                    let x = rng.gen_range(0..5) as f64;
                    let e = if rng.gen_bool(0.7) { (a[0] as usize + x as usize) % n_events } else { rng.gen_range(0..n_events) };
                    Sample { values: vec![code(&a), code(&b), Value::Num(x)], event: e }
                })
                .collect()
        };
        let (g, h) = (mk(80), mk(40));
        let mut t = grow_tree(&feats, n_events, &g, &h, &GrowConfig::default());
        t.smooth(&h);
        t.propagate_unreliable();
        for (i, node) in t.nodes.iter().enumerate() {
            let s: f64 = node.dist.iter().sum();
            check(close(s, 1.0, 1e-9), || format!("tree node {i} sums to {s}"))?;
        }
        cases += 1;
    }
    // Backoff contexts.
    for _ in 0..250 {
        let sents = random_sentences(&mut rng, 6, 20);
        let order = rng.gen_range(1..=3);
        let m = BackoffModel::build(&NgramCounts::from_sentences(&sents, order));
        let words: Vec<String> = m.vocab.iter().cloned().collect();
        for ctx in all_contexts(&words, order - 1) {
            let s: f64 = m.outcomes().iter().map(|w| m.prob(&ctx, w)).sum();
            check(close(s, 1.0, 1e-9), || format!("backoff context {ctx:?} sums to {s}"))?;
        }
        cases += 1;
    }
    // Silence-adjusted transition distributions.
    for _ in 0..250 {
        let buckets = rng.gen_range(1..30);
        let mut boundaries: Vec<f64> = (1..buckets).map(|_| rng.gen_range(0.0..3.0)).collect();
        boundaries.sort_by(f64::total_cmp);
        let factors = (0..buckets).map(|_| std::array::from_fn(|_| rng.gen_range(0.05..5.0))).collect();
        let table = SilenceTable { boundaries, factors, sigma: 1.0 };
        let k = rng.gen_range(1..=6);
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
        let z: f64 = raw.iter().sum();
        let dist: Vec<(TransitionClass, f64)> = (0..k).map(|i| (TransitionClass::ALL[i], raw[i] / z)).collect();
        let s: f64 = table.adjust(&dist, rng.gen_range(0.0..3.0)).iter().sum();
        check(close(s, 1.0, 1e-9), || format!("silence-adjusted distribution sums to {s}"))?;
        cases += 1;
    }
    // Decoder expansions over the whole vocabulary.
    while cases < 1000 {
        let mut cfg = random_config(&mut rng);
        cfg.silence = cfg.tones || cfg.repairs;
        let mut src = HashedSource::random(&mut rng, 3);
        if cfg.silence {
            let mut boundaries: Vec<f64> = (0..9).map(|_| rng.gen_range(0.0..2.0)).collect();
            boundaries.sort_by(f64::total_cmp);
            let factors = (0..10).map(|_| std::array::from_fn(|_| rng.gen_range(0.2..3.0))).collect();
            src.table = Some(SilenceTable { boundaries, factors, sigma: 1.0 });
        }
        let mut st = State::new();
        for _ in 0..rng.gen_range(0..4) {
            let w = random_words(&mut rng, &src, 1).remove(0);
            let next = expand(&src, &cfg, &st, &w, Some(0.3));
            match next.choose(&mut rng) {
                Some(x) => st = x.state.clone(),
                None => break,
            }
        }
        let gap = Some(rng.gen_range(0.0..2.0));
        let s: f64 = src.words().iter().flat_map(|w| expand(&src, &cfg, &st, w, gap)).map(|x| x.factors.product()).sum();
        check(close(s, 1.0, 1e-9), || format!("expansions sum to {s} under {cfg:?}"))?;
        cases += 1;
    }
    Ok(format!("{cases} randomized cases"))
}

fn good_turing_katz() -> Outcome {
    let coc: BTreeMap<u64, u64> = [(1, 10), (2, 5)].into();
    check(gt_discount(1, &coc, 5) == 1.0, || format!("r*(1) = {}", gt_discount(1, &coc, 5)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let sents = random_sentences(&mut rng, 8, 20);
        for order in 1..=3 {
            let counts = NgramCounts::from_sentences(&sents, order);
            let m = BackoffModel::build(&counts);
            let words: Vec<String> = m.vocab.iter().cloned().collect();
            for ctx in all_contexts(&words, order - 1) {
                let s: f64 = m.outcomes().iter().map(|w| m.prob(&ctx, w)).sum();
                check(close(s, 1.0, 1e-9), || format!("order {order} context {ctx:?} sums to {s}"))?;
            }
        }
        // Katz recursion for bigrams, from raw counts.
        let counts = NgramCounts::from_sentences(&sents, 2);
        let m = BackoffModel::build(&counts);
        let uni = BackoffModel::build(&NgramCounts::from_sentences(&sents, 1));
        let coc2 = counts.count_of_counts(2);
        let mut followers: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        for (g, &c) in &counts.grams[1] {
            *followers.entry(g[0].clone()).or_default().entry(g[1].clone()).or_insert(0) += c;
        }
        for (ctx, seen) in &followers {
            let total: u64 = seen.values().sum();
            let seen_mass: f64 = seen.values().map(|&c| gt_discount(c, &coc2, 5) / total as f64).sum();
            let seen_uni: f64 = seen.keys().map(|w| uni.prob::<&str>(&[], w)).sum();
            let alpha = (1.0 - seen_mass) / (1.0 - seen_uni);
            for w in m.outcomes() {
                let want = match seen.get(&w) {
                    Some(&c) => gt_discount(c, &coc2, 5) / total as f64,
                    None => alpha * uni.prob::<&str>(&[], &w),
                };
                let got = m.prob(&[ctx.as_str()], &w);
                check(close(got, want, 1e-12), || format!("Pr({w}|{ctx}) = {got}, recursion gives {want}"))?;
            }
        }
    }
    Ok("100 toy corpora, orders 1-3".into())
}

fn em_lambdas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in 0..20 {
        let components = rng.gen_range(2..5);
        let buckets = rng.gen_range(1..4);
        let events: Vec<InterpEvent> = (0..rng.gen_range(10..60))
            .map(|_| InterpEvent {
                probs: (0..components).map(|_| rng.gen_range(0.001..1.0)).collect(),
                bucket: rng.gen_range(0..buckets),
            })
            .collect();
        for k in 1..=100 {
            let r = interpolate_em(&events, components, buckets, k, 0.0);
            for b in &r.lambdas {
                let s: f64 = b.iter().sum();
                check(close(s, 1.0, 1e-9), || format!("problem {p} iteration {k}: weights sum to {s}"))?;
            }
        }
        let r = interpolate_em(&events, components, buckets, 100, 0.0);
        check(r.iterations == 100, || format!("problem {p} stopped after {}", r.iterations))?;
        for w in r.log_likelihood.windows(2) {
            check(w[1] >= w[0] - 1e-9, || format!("problem {p}: likelihood fell {} -> {}", w[0], w[1]))?;
        }
    }
    for p in 0..20 {
        let events: Vec<InterpEvent> = (0..rng.gen_range(5..40))
            .map(|_| InterpEvent { probs: vec![rng.gen_range(0.001..1.0), rng.gen_range(0.001..1.0)], bucket: 0 })
            .collect();
        let ll = |l: f64| events.iter().map(|e| (l * e.probs[0] + (1.0 - l) * e.probs[1]).ln()).sum::<f64>();
        let grid = (0..=10_000).map(|i| i as f64 * 1e-4).max_by(|a, b| ll(*a).total_cmp(&ll(*b))).unwrap();
        let r = interpolate_em(&events, 2, 1, 100_000, 1e-13);
        let got = r.lambdas[0][0];
        check(close(got, grid, 1e-3), || format!("problem {p}: EM {got} vs grid {grid}"))?;
    }
    Ok("20 multi-weight and 20 one-weight problems".into())
}

/// Information after mapping every item to its class.
fn class_mi(counts: &AdjacencyCounts, class: &[usize]) -> f64 {
    let mut m: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (&(a, b), &c) in &counts.bigram {
        *m.entry((class[a], class[b])).or_insert(0) += c;
    }
    let k = class.iter().max().map_or(0, |x| x + 1);
    mutual_information(&AdjacencyCounts { items: vec![String::new(); k], unigram: vec![0; k], bigram: m })
}

/// Greedy clustering with every candidate's loss recomputed from scratch.
/// Classes are named by their smallest member under `names`.
fn brute_force_merges(counts: &AdjacencyCounts, names: &[String], group: &[usize]) -> Vec<(String, String, f64)> {
    let n = counts.items.len();
    let mut class: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        let mut live = class.clone();
        live.sort_unstable();
        live.dedup();
        let key = |c: usize| (0..n).filter(|&i| class[i] == c).map(|i| names[i].clone()).min().unwrap();
        let base = class_mi(counts, &class);
        let mut best: Option<(f64, String, String, usize, usize)> = None;
        for (i, &a) in live.iter().enumerate() {
            for &b in &live[i + 1..] {
                if group[a] != group[b] {
                    continue;
                }
                let merged: Vec<usize> = class.iter().map(|&c| if c == b { a } else { c }).collect();
                let loss = base - class_mi(counts, &merged);
                let (x, y) = (key(a), key(b));
                let (ka, kb) = if x <= y { (x, y) } else { (y, x) };
                let better = match &best {
                    None => true,
                    Some((bl, bka, bkb, _, _)) => loss < bl - 1e-9 || (loss <= bl + 1e-9 && (&ka, &kb) < (bka, bkb)),
                };
                if better {
                    best = Some((loss, ka, kb, a, b));
                }
            }
        }
        let Some((loss, ka, kb, a, b)) = best else { break };
        out.push((ka, kb, loss));
        for c in class.iter_mut() {
            if *c == b {
                *c = a;
            }
        }
    }
    out
}

fn clustering_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut merges = 0;
    for case in 0..60 {
        let vocab = rng.gen_range(2..=12);
        let tokens = rng.gen_range(10..60);
        let sents = random_sentences(&mut rng, vocab, tokens);
        let counts = AdjacencyCounts::from_sequences(&sents);
        let got = cluster_items(&counts).merges;
        let want = brute_force_merges(&counts, &counts.items, &vec![0; counts.items.len()]);
        check(got.len() == want.len(), || format!("case {case}: {} merges vs {}", got.len(), want.len()))?;
        for (g, w) in got.iter().zip(&want) {
            check(g.first == w.0 && g.second == w.1 && close(g.loss, w.2, 1e-9), || {
                format!("case {case}: merged {}+{} ({}), oracle {}+{} ({})", g.first, g.second, g.loss, w.0, w.1, w.2)
            })?;
        }
        merges += got.len();

        // Per-POS clustering: oracle restricted to items sharing a tag.
        let tagged: Vec<Vec<(String, String)>> = sents
            .iter()
            .map(|s| s.iter().map(|w| (w.clone(), format!("P{}", w[1..].parse::<usize>().unwrap() % 3))).collect())
            .collect();
        let wc = cluster_words(&tagged, WordMode::ForcePos, 0);
        let joined: Vec<Vec<String>> = tagged.iter().map(|s| s.iter().map(|(w, p)| format!("{w}@{p}")).collect()).collect();
        let jc = AdjacencyCounts::from_sequences(&joined);
        let mut tags: Vec<&str> = jc.items.iter().map(|i| i.split('@').nth(1).unwrap()).collect();
        tags.dedup();
        let group: Vec<usize> = jc
            .items
            .iter()
            .map(|i| tags.iter().position(|t| *t == i.split('@').nth(1).unwrap()).unwrap())
            .collect();
        let names: Vec<String> = jc.items.iter().map(|i| i.split('@').next().unwrap().to_string()).collect();
        let want = brute_force_merges(&jc, &names, &group);
        check(wc.merges.len() == want.len(), || format!("case {case}: per-tag merge count differs"))?;
        for (g, w) in wc.merges.iter().zip(&want) {
            check(g.first == w.0 && g.second == w.1, || {
                format!("case {case}: per-tag merge {}+{} vs {}+{}", g.first, g.second, w.0, w.1)
            })?;
        }
        for (pos, tree) in &wc.trees {
            for (w, _) in tree.leaves() {
                let p = format!("P{}", w[1..].parse::<usize>().unwrap() % 3);
                check(&p == pos, || format!("case {case}: {w} clustered under {pos}"))?;
            }
        }
    }
    Ok(format!("60 vocabularies, {merges} merges"))
}

fn decoder_exactness() -> Outcome {
    let mut repair_paths = 0usize;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let cfg = random_config(&mut rng);
        let n_tags = if cfg.correction { rng.gen_range(2..=3) } else { rng.gen_range(2..=4) };
        let src = HashedSource::random(&mut rng, n_tags);
        let n = rng.gen_range(1..=5);
        let words = random_words(&mut rng, &src, n);
        let en = enumerate(&src, &cfg, &words);
        repair_paths += en.paths.iter().filter(|p| p.tags.iter().any(|t| t.r != Default::default())).count();
        let dec = decode_turn(&src, &cfg, &words, &vec![None; n]);
        if en.paths.is_empty() {
            check(dec.is_err(), || format!("seed {seed}: decoder found a path the enumerator did not"))?;
            continue;
        }
        let dec = dec.map_err(|e| format!("seed {seed}: {e}"))?;
        let best = en.paths.iter().map(|p| p.prob()).fold(0.0, f64::max);
        check(close(dec.logp, best.ln(), 1e-9), || format!("seed {seed}: logp {} vs {}", dec.logp, best.ln()))?;
        let tied: Vec<_> = en.paths.iter().filter(|p| close(p.prob().ln(), dec.logp, 1e-9)).collect();
        let pos: Vec<String> = dec.pos.clone();
        check(tied.iter().any(|p| p.pos.iter().map(|&i| src.tags[i].clone()).collect::<Vec<_>>() == pos), || {
            format!("seed {seed}: POS {pos:?} not among the best paths")
        })?;
        let mut prev = 1.0f64;
        for (i, &lp) in dec.word_log2.iter().enumerate() {
            let exact = en.prefix_mass[i].log2() - prev.log2();
            check(close(lp, exact, 1e-9), || format!("seed {seed} word {i}: {lp} vs {exact}"))?;
            prev = en.prefix_mass[i];
        }
    }
    Ok(format!("200 turns, {repair_paths} enumerated paths with repairs"))
}

fn correspondence_override() -> Outcome {
    let mut seen = 0;
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
        let mut cfg = random_config(&mut rng);
        cfg.repairs = true;
        cfg.correction = true;
        let src = HashedSource::random(&mut rng, 3);
        let words = random_words(&mut rng, &src, 6);
        let mut beam = vec![State::new()];
        for w in &words {
            let mut next = Vec::new();
            for st in &beam {
                for x in expand(&src, &cfg, st, w, None) {
                    if x.tags.c == Some(Corr::M) {
                        check(x.factors.w == 1.0 && x.factors.p == 1.0, || format!("seed {seed}: C=m with {:?}", x.factors))?;
                        let licensed = x.state.history.last().unwrap();
                        check(&*licensed.word == w, || format!("seed {seed}: match on a different word"))?;
                        seen += 1;
                    }
                    next.push(x.state);
                }
            }
            next.shuffle(&mut rng);
            next.truncate(30);
            beam = next;
        }
    }
    check(seen > 0, || "no match was hypothesized".into())?;
    Ok(format!("{seen} match hypotheses"))
}

fn context_cleanup() -> Outcome {
    let all = turns();
    let collapsed = LmConfig { collapse_repairs: true, ..correction() };
    for g in &all {
        for cfg in [detection(), correction(), collapsed] {
            catch_unwind(AssertUnwindSafe(|| cleanup_holds(g, &cfg))).map_err(|e| panic_text(&e))?;
        }
    }
    let ids: Vec<&str> = all.iter().map(|g| g.id.as_str()).collect();
    Ok(format!("{} fixtures x 3 configs", ids.join(", ")))
}

fn synthetic_end_to_end() -> Outcome {
    let corpus = generate(&SynthParams {
        turns: 2500,
        repair_rate: 0.3,
        replacement_share: 0.0,
        abridged_share: 0.0,
        seed: 11,
        ..SynthParams::default()
    })
    .map_err(|e| e.to_string())?;
    let dialogs = corpus.dialogs.len();
    let cut = dialogs * 4 / 5;
    let train_set = corpus.subset(&(0..cut).collect::<Vec<_>>());
    let test = gold_turns(&corpus.subset(&(cut..dialogs).collect::<Vec<_>>())).map_err(|e| e.to_string())?;
    check(test.len() == 500, || format!("{} test turns", test.len()))?;
    let opts = TrainOptions::default();
    let run = |cfg: LmConfig| -> Result<Metrics, String> {
        let model = train(&train_set, cfg, opts).map_err(|e| e.to_string())?;
        evaluate(&model, &test).map_err(|e| e.to_string())
    };
    let full = run(LmConfig::full())?;
    let pos_only = run(LmConfig::pos_only())?;
    let collapsed = run(LmConfig { collapse_repairs: true, ..LmConfig::full() })?;
    let pf = full.word_perplexity.perplexity().ok_or("no full perplexity")?;
    let pp = pos_only.word_perplexity.perplexity().ok_or("no POS-only perplexity")?;
    check(pf < pp, || format!("full perplexity {pf} not below POS-only {pp}"))?;
    let f1 = full.repairs_all.f1().ok_or("no repairs scored")?;
    check(f1 >= 0.8, || format!("repair F1 {f1}"))?;
    for (name, m) in [("full", &full), ("collapsed", &collapsed)] {
        check(m.turns == 500, || format!("{name}: {} turns", m.turns))?;
        check(m.word_perplexity.perplexity().is_some_and(f64::is_finite), || format!("{name}: perplexity"))?;
        check(m.repairs_all.f1().is_some_and(|f| (0.0..=1.0).contains(&f)), || format!("{name}: repair F1"))?;
        check(m.repairs_exact.hits <= m.repairs_all.hits, || format!("{name}: exact hits exceed all-mode hits"))?;
    }
    let fc = collapsed.repairs_all.f1().unwrap_or(f64::NAN);
    Ok(format!("perplexity {pf:.3} vs POS-only {pp:.3}; repair F1 {f1:.3}, collapsed {fc:.3}"))
}

fn same_bits(a: &Decoded, b: &Decoded) -> bool {
    let bits = |d: &Decoded| -> Vec<u64> {
        std::iter::once(d.logp)
            .chain(d.word_log2.iter().copied())
            .chain(d.factors.iter().flat_map(|f| [f.t, f.e, f.r, f.ter, f.o, f.l, f.c, f.p, f.w]))
            .map(f64::to_bits)
            .collect()
    };
    bits(a) == bits(b) && a.tags == b.tags && a.pos == b.pos && a.survivors == b.survivors
}

fn silence_identity() -> Outcome {
    let mut decoded = 0;
    for g in turns() {
        let silences: Vec<Option<f64>> = (0..g.len()).map(|i| Some(0.05 + 0.1 * (i % 7) as f64)).collect();
        let mut src = ScriptedSource::new(tagset());
        let base = LmConfig { beam: 40, ..LmConfig::full() };
        let plain = decode_turn(&src, &LmConfig { silence: false, ..base }, &g.words, &silences).map_err(|e| e.to_string())?;
        src.table = Some(SilenceTable::flat());
        let flat = decode_turn(&src, &base, &g.words, &silences).map_err(|e| e.to_string())?;
        check(same_bits(&plain, &flat), || format!("{}: flat table changed the decode", g.id))?;
        decoded += 1;
    }
    let corpus = generate(&SynthParams { turns: 300, repair_rate: 0.3, seed: 12, ..SynthParams::default() }).map_err(|e| e.to_string())?;
    let mut model = train(&corpus.subset(&(0..12).collect::<Vec<_>>()), LmConfig::full(), TrainOptions::default())
        .map_err(|e| e.to_string())?;
    let test = gold_turns(&corpus.subset(&[12])).map_err(|e| e.to_string())?;
    let off = LmConfig { silence: false, ..model.config };
    let plain: Vec<Decoded> = test
        .iter()
        .map(|g| decode_turn(&model, &off, &g.words, &g.silences))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    model.silence = Some(SilenceTable::flat());
    let on = model.config;
    for (g, p) in test.iter().zip(&plain) {
        let f = decode_turn(&model, &on, &g.words, &g.silences).map_err(|e| e.to_string())?;
        check(same_bits(p, &f), || format!("{}: flat table changed the trained decode", g.id))?;
        decoded += 1;
    }
    Ok(format!("{decoded} turns bit-identical"))
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("metric arithmetic", metric_arithmetic),
        ("normalization", normalization),
        ("Good-Turing and Katz backoff", good_turing_katz),
        ("EM interpolation weights", em_lambdas),
        ("clustering oracle", clustering_oracle),
        ("decoder exactness", decoder_exactness),
        ("correspondence override", correspondence_override),
        ("context cleanup", context_cleanup),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("silence identity", silence_identity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|a| a == &n.to_string() || name.contains(a.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(*f).unwrap_or_else(|e| Err(panic_text(&e)));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
