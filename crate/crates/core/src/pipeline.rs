//! Training, decoding and evaluation over whole corpora.

use crate::corpus::{derive_gold_tags, normalize_corpus, partition_folds, Corpus, CorpusError, GoldTurn, Label, RepairKind, Turn};
use crate::eval::{score_corrections, score_dm, score_pos, score_repairs, score_tones, EvalError, Metrics, RepairMode, RepairSpan};
use crate::lm::model::{ModelError, TrainOptions};
use crate::lm::{decode_turn, score_gold_path, Decoded, LmConfig, LmError, TrainedModel};
use crate::tags::{EditTag, RepairTag, ToneTag};
use std::thread;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("turn {turn}: {source}")]
    Decode { turn: String, source: LmError },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Normalizes the corpus and derives the gold tags of every turn.
pub fn gold_turns(corpus: &Corpus) -> Result<Vec<GoldTurn>, CorpusError> {
    normalize_corpus(corpus)?.turns().map(derive_gold_tags).collect()
}

pub fn train(corpus: &Corpus, config: LmConfig, options: TrainOptions) -> Result<TrainedModel, PipelineError> {
    Ok(TrainedModel::train(&gold_turns(corpus)?, config, options)?)
}

fn spans(gold: &GoldTurn, collapse: bool) -> Vec<RepairSpan> {
    gold.repairs
        .iter()
        .map(|r| {
            let mut s = RepairSpan::from(r);
            if collapse && s.tag == RepairTag::Can {
                s.tag = RepairTag::Mod;
            }
            s
        })
        .collect()
}

/// Decodes one turn and scores it against its gold tags.
pub fn evaluate_turn(model: &TrainedModel, gold: &GoldTurn) -> Result<(Decoded, Metrics), PipelineError> {
    let cfg = &model.config;
    let decoded = decode_turn(model, cfg, &gold.words, &gold.silences)
        .map_err(|source| PipelineError::Decode { turn: gold.id.clone(), source })?;
    let mut m = Metrics { turns: 1, ..Metrics::default() };
    m.pos = score_pos(&gold.pos, &decoded.pos, false)?;
    m.pos_ignore_dm = score_pos(&gold.pos, &decoded.pos, true)?;
    m.dm = score_dm(&gold.pos, &decoded.pos)?;
    if cfg.tones {
        let g: Vec<ToneTag> = gold.tags.iter().map(|t| t.t).collect();
        let h: Vec<ToneTag> = decoded.tags.iter().map(|t| t.t).collect();
        m.tones = score_tones(&g, &h)?;
    }
    if cfg.repairs {
        let g = spans(gold, cfg.collapse_repairs);
        m.repairs_all = score_repairs(&g, &decoded.repairs, RepairMode::All);
        m.repairs_exact = score_repairs(&g, &decoded.repairs, RepairMode::Exact);
        if cfg.correction {
            m.corrections = score_corrections(&g, &decoded.repairs);
        }
    }
    for &lp in &decoded.word_log2 {
        m.word_perplexity.add_log2(lp);
    }
    for lp in score_gold_path(model, cfg, &gold.words, &gold.silences, &gold.tags, &gold.pos) {
        m.branching_perplexity.add_log2(lp.unwrap_or(f64::NEG_INFINITY));
    }
    Ok((decoded, m))
}

/// Decodes turns on all available cores; results keep turn order.
pub fn decode_all(model: &TrainedModel, turns: &[GoldTurn]) -> Vec<Result<(Decoded, Metrics), PipelineError>> {
    let threads = thread::available_parallelism().map_or(1, |n| n.get()).min(turns.len().max(1));
    let chunk = turns.len().div_ceil(threads).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = turns
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|g| evaluate_turn(model, g)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("decoder thread panicked")).collect()
    })
}

/// Summed metrics over the turns, merged in turn order.
pub fn evaluate(model: &TrainedModel, turns: &[GoldTurn]) -> Result<Metrics, PipelineError> {
    let mut total = Metrics::default();
    for r in decode_all(model, turns) {
        total.merge(&r?.1);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalReport {
    /// Test dialog indices and metrics of each fold.
    pub folds: Vec<(Vec<usize>, Metrics)>,
    /// Counts summed over folds.
    pub total: Metrics,
}

/// Trains and tests one model per fold, folds running concurrently.
pub fn crossval(
    corpus: &Corpus,
    config: LmConfig,
    options: TrainOptions,
    k: usize,
    seed: u64,
) -> Result<CrossvalReport, PipelineError> {
    let folds = partition_folds(corpus, k, seed)?;
    let results: Vec<Result<Metrics, PipelineError>> = thread::scope(|s| {
        let handles: Vec<_> = folds
            .iter()
            .map(|f| {
                s.spawn(move || {
                    let model = train(&corpus.subset(&f.train), config, options)?;
                    evaluate(&model, &gold_turns(&corpus.subset(&f.test))?)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fold thread panicked")).collect()
    });
    let mut report = CrossvalReport { folds: Vec::new(), total: Metrics::default() };
    for (f, r) in folds.into_iter().zip(results) {
        let m = r?;
        report.total.merge(&m);
        report.folds.push((f.test, m));
    }
    Ok(report)
}

/// The decoded interpretation as an annotated turn, token for token with
/// the normalized input: hypothesized POS tags, tones, editing terms and
/// repairs with their removed-speech onsets.
pub fn decoded_turn(input: &Turn, decoded: &Decoded) -> Turn {
    let mut out = Turn::new(input.speaker.clone(), input.id.clone());
    let n = decoded.words.len();
    let mut labels: Vec<Vec<Label>> = vec![Vec::new(); n];
    for i in 0..n {
        if decoded.tags[i].t == ToneTag::Tone && i > 0 {
            labels[i - 1].push(Label::Tone);
        }
        if matches!(decoded.tags[i].e, EditTag::Push | EditTag::Et) {
            labels[i].push(Label::Et);
        }
    }
    for (k, r) in decoded.repairs.iter().enumerate() {
        let ip = r.editing_term.first().copied().unwrap_or(r.onset).saturating_sub(1);
        let index = 10 * (k as u32 + 1);
        let kind = match r.tag {
            RepairTag::Can => RepairKind::Can,
            RepairTag::Abr => RepairKind::Abr,
            _ => RepairKind::Mod,
        };
        labels[ip].push(Label::Ip { index, kind: Some(kind) });
        if let Some(&first) = r.removed.first() {
            labels[first].push(Label::Onset(index));
        }
    }
    for (i, (word, ls)) in decoded.words.iter().zip(labels).enumerate() {
        let surface = input.tokens.get(i).map_or(word.as_str(), |t| t.surface.as_str());
        let tok = crate::corpus::Token::new(surface, decoded.pos[i].clone()).with_labels(ls);
        out.push(tok, input.silences.get(i).copied().flatten());
    }
    out
}
