use super::{sort_labels, Corpus, CorpusError, Label, Token, Turn};
use crate::tags::{FRAGMENT, FRAGMENT_WORD, TURN, TURN_WORD};

/// Contractions whose parts cannot be recovered by splitting at apostrophes.
const SPECIAL_CONTRACTIONS: &[(&str, &[&str])] = &[
    ("gonna", &["going", "ta"]),
    ("wanna", &["want", "ta"]),
    ("gotta", &["got", "ta"]),
    ("hafta", &["have", "ta"]),
];

fn split_surface(surface: &str) -> Vec<String> {
    let lower = surface.to_lowercase();
    if let Some((_, parts)) = SPECIAL_CONTRACTIONS.iter().find(|(w, _)| *w == lower) {
        return parts.iter().map(|s| s.to_string()).collect();
    }
    let mut parts = Vec::new();
    let mut cur = String::new();
    for ch in surface.chars() {
        if ch == '\'' && !cur.is_empty() {
            parts.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    parts.push(cur);
    parts
}

/// Splits contractions, replaces fragments by a common token and appends the
/// end-of-turn token. Already-normalized turns are returned unchanged.
pub fn normalize_tokens(turn: &Turn) -> Result<Turn, CorpusError> {
    let mut out = Turn::new(turn.speaker.clone(), turn.id.clone());
    for (tok, silence) in turn.tokens.iter().zip(&turn.silences) {
        if tok.pos == TURN {
            continue;
        }
        if tok.pos.contains('^') {
            let tags: Vec<&str> = tok.pos.split('^').collect();
            let words = split_surface(&tok.surface);
            if tags.len() != words.len() {
                return Err(CorpusError::ContractionMismatch {
                    surface: tok.surface.clone(),
                    parts: tags.len(),
                    split: words.len(),
                });
            }
            let n = tags.len();
            for (k, (w, p)) in words.into_iter().zip(tags).enumerate() {
                let mut labels: Vec<Label> = tok
                    .labels
                    .iter()
                    .filter(|l| match l {
                        Label::Ip { .. } | Label::Tone => k + 1 == n,
                        Label::Et => true,
                        _ => k == 0,
                    })
                    .cloned()
                    .collect();
                sort_labels(&mut labels);
                let s = if k + 1 == n { *silence } else { None };
                out.push(Token { surface: w, pos: p.to_string(), labels }, s);
            }
        } else if tok.is_fragment() {
            out.push(
                Token { surface: FRAGMENT_WORD.into(), pos: FRAGMENT.into(), labels: tok.labels.clone() },
                *silence,
            );
        } else {
            out.push(tok.clone(), *silence);
        }
    }
    out.push(Token::new(TURN_WORD, TURN), None);
    Ok(out)
}

pub fn normalize_corpus(corpus: &Corpus) -> Result<Corpus, CorpusError> {
    let mut out = corpus.clone();
    for d in &mut out.dialogs {
        for t in &mut d.turns {
            *t = normalize_tokens(t)?;
        }
    }
    Ok(out)
}
