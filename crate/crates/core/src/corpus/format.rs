use super::{
    sort_labels, Corpus, Dialog, Label, ParseError, ParseErrorKind, RepairKind, Token, Turn,
};
use crate::tags;
use std::collections::BTreeSet;
use std::fmt::Write;

/// Parses the line-oriented corpus format.
///
/// ```
/// let src = "#DIALOG d1\n#TURN A t1\nokay/AC|tone <sil=0.4> go/VB\n";
/// let corpus = dialm_core::corpus::parse_corpus(src).unwrap();
/// assert_eq!(corpus.dialogs[0].turns[0].tokens.len(), 2);
/// ```
pub fn parse_corpus(source: &str) -> Result<Corpus, ParseError> {
    let mut corpus = Corpus::default();
    // Line/column of each token in the current turn, for dangling-index errors.
    let mut positions: Vec<(usize, usize)> = Vec::new();
    for (lineno, raw) in source.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("#DIALOG") {
            finish_turn(&corpus, &positions)?;
            positions.clear();
            let id = header_field(rest, 1, line, "#DIALOG <id>")?;
            corpus.dialogs.push(Dialog { id: id[0].to_string(), turns: Vec::new() });
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("#TURN") {
            finish_turn(&corpus, &positions)?;
            positions.clear();
            let f = header_field(rest, 2, line, "#TURN <speaker> <id>")?;
            let dialog = corpus.dialogs.last_mut().ok_or(ParseError {
                line,
                column: 1,
                kind: ParseErrorKind::Syntax("#TURN before any #DIALOG".into()),
            })?;
            dialog.turns.push(Turn::new(f[0], f[1]));
            continue;
        }
        let turn = corpus
            .dialogs
            .last_mut()
            .and_then(|d| d.turns.last_mut())
            .ok_or(ParseError {
                line,
                column: 1,
                kind: ParseErrorKind::Syntax("token line outside a turn".into()),
            })?;
        for (column, item) in items(raw) {
            if let Some(body) = item.strip_prefix("<sil=") {
                let value = body
                    .strip_suffix('>')
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| syntax(line, column, format!("bad silence item `{item}`")))?;
                match turn.silences.last_mut() {
                    Some(slot @ None) => *slot = Some(value),
                    Some(Some(_)) => {
                        return Err(syntax(line, column, "two silences after one token".into()))
                    }
                    None => return Err(syntax(line, column, "silence before the first token".into())),
                }
                continue;
            }
            let token = parse_token(item, line, column)?;
            turn.push(token, None);
            positions.push((line, column));
        }
    }
    finish_turn(&corpus, &positions)?;
    Ok(corpus)
}

fn syntax(line: usize, column: usize, msg: String) -> ParseError {
    ParseError { line, column, kind: ParseErrorKind::Syntax(msg) }
}

fn header_field<'a>(
    rest: &'a str,
    n: usize,
    line: usize,
    usage: &str,
) -> Result<Vec<&'a str>, ParseError> {
    let fields: Vec<&str> = rest.split_whitespace().collect();
    if fields.len() != n || !rest.starts_with(char::is_whitespace) {
        return Err(syntax(line, 1, format!("expected `{usage}`")));
    }
    Ok(fields)
}

/// Whitespace-separated items with their 1-based character columns.
fn items(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut col = 0;
    let mut start_col = 0;
    for (byte, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((start_col, &line[s..byte]));
            }
        } else if start.is_none() {
            start = Some(byte);
            start_col = col;
        }
    }
    if let Some(s) = start {
        out.push((start_col, &line[s..]));
    }
    out.into_iter()
}

fn parse_token(item: &str, line: usize, column: usize) -> Result<Token, ParseError> {
    let (main, labels) = match item.split_once('|') {
        Some((m, l)) => (m, Some(l)),
        None => (item, None),
    };
    let (surface, pos) = main
        .rsplit_once('/')
        .filter(|(s, p)| !s.is_empty() && !p.is_empty())
        .ok_or_else(|| syntax(line, column, format!("expected `surface/POS`, found `{item}`")))?;
    for part in pos.split('^') {
        if !tags::is_known_pos(part) {
            return Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::UnknownPos(part.to_string()),
            });
        }
    }
    let mut parsed = Vec::new();
    if let Some(labels) = labels {
        for l in labels.split(',') {
            parsed.push(
                parse_label(l)
                    .ok_or_else(|| syntax(line, column, format!("unknown label `{l}`")))?,
            );
        }
    }
    sort_labels(&mut parsed);
    Ok(Token { surface: surface.to_string(), pos: pos.to_string(), labels: parsed })
}

fn parse_index(s: &str) -> Option<u32> {
    if s.is_empty() {
        Some(0)
    } else if s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

/// Parses one annotation label such as `ip10:mod+`, `sr10<`, `m11` or `et`.
pub(crate) fn parse_label(s: &str) -> Option<Label> {
    match s {
        "et" => return Some(Label::Et),
        "tone" => return Some(Label::Tone),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("ip") {
        let (idx, kind) = match rest.split_once(':') {
            Some((i, k)) => (i, Some(k.parse::<RepairKind>().ok()?)),
            None => (rest, None),
        };
        return Some(Label::Ip { index: parse_index(idx)?, kind });
    }
    if let Some(rest) = s.strip_prefix("sr") {
        return Some(Label::Onset(parse_index(rest.strip_suffix('<')?)?));
    }
    let (head, tail) = s.split_at(1.min(s.len()));
    match head {
        "m" if !tail.is_empty() => Some(Label::Match(parse_index(tail)?)),
        "r" if !tail.is_empty() => Some(Label::Replace(parse_index(tail)?)),
        "p" if !tail.is_empty() => Some(Label::Multi(parse_index(tail)?)),
        "x" => Some(Label::Delete(parse_index(tail)?)),
        _ => None,
    }
}

/// Checks that every correspondence, deletion and onset label of the last
/// turn refers to a repair annotated in that turn.
fn finish_turn(corpus: &Corpus, positions: &[(usize, usize)]) -> Result<(), ParseError> {
    let Some(turn) = corpus.dialogs.last().and_then(|d| d.turns.last()) else {
        return Ok(());
    };
    let repairs: BTreeSet<u32> = turn
        .tokens
        .iter()
        .flat_map(|t| t.labels.iter())
        .filter_map(|l| match l {
            Label::Ip { index, .. } => Some(*index),
            _ => None,
        })
        .collect();
    for (tok, &(line, column)) in turn.tokens.iter().zip(positions) {
        for label in &tok.labels {
            let ok = match label {
                Label::Match(i) | Label::Replace(i) | Label::Multi(i) => {
                    i % 10 != 0 && repairs.contains(&(i / 10 * 10))
                }
                Label::Delete(i) | Label::Onset(i) => repairs.contains(i),
                _ => true,
            };
            if !ok {
                return Err(ParseError {
                    line,
                    column,
                    kind: ParseErrorKind::DanglingIndex(label.to_string()),
                });
            }
        }
    }
    Ok(())
}

/// Canonical text form: one header per dialog and turn, one token line per
/// non-empty turn, labels sorted.
pub fn serialize_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for dialog in &corpus.dialogs {
        let _ = writeln!(out, "#DIALOG {}", dialog.id);
        for turn in &dialog.turns {
            let _ = writeln!(out, "#TURN {} {}", turn.speaker, turn.id);
            if turn.tokens.is_empty() {
                continue;
            }
            let mut items = Vec::with_capacity(turn.tokens.len() * 2);
            for (i, tok) in turn.tokens.iter().enumerate() {
                let mut item = format!("{}/{}", tok.surface, tok.pos);
                if !tok.labels.is_empty() {
                    let mut labels: Vec<String> = tok.labels.iter().map(|l| l.to_string()).collect();
                    labels.sort();
                    item.push('|');
                    item.push_str(&labels.join(","));
                }
                items.push(item);
                if let Some(Some(s)) = turn.silences.get(i) {
                    items.push(format!("<sil={s}>"));
                }
            }
            out.push_str(&items.join(" "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const UTT42: &str = "#DIALOG d93-15.2\n#TURN s utt42\n\
        engine/NN|m1 two/CD|r2 from/PREP|m3 Elmi(ra)-/NNP|m4,ip:mod+ or/CC_D|et \
        engine/NN|m1 three/CD|r2 from/PREP|m3 Elmira/NNP|m4\n";

    #[test]
    fn parses_ambiguous_modification_repair() {
        let c = parse_corpus(UTT42).unwrap();
        let turn = &c.dialogs[0].turns[0];
        assert_eq!(turn.tokens.len(), 9);
        assert!(turn.tokens[3].is_fragment());
        assert!(turn.tokens[3]
            .labels
            .contains(&Label::Ip { index: 0, kind: Some(RepairKind::ModAmbiguous) }));
        let reps = super::super::repair_annotations(turn).unwrap();
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].correspondences.len(), 4);
    }

    #[test]
    fn empty_turn_is_legal() {
        let c = parse_corpus("#DIALOG d\n#TURN A t1\n#TURN B t2\nokay/AC\n").unwrap();
        assert!(c.dialogs[0].turns[0].tokens.is_empty());
        assert_eq!(c.dialogs[0].turns[1].tokens.len(), 1);
    }

    #[test]
    fn round_trip_is_canonical() {
        let src = "#DIALOG d\n#TURN A t\nwe/PRP <sil=0.25>   can't/MD^RB|tone,x10 go/VB|ip10:can \n  um/UH_FP|et\n";
        let c = parse_corpus(src).unwrap();
        let text = serialize_corpus(&c);
        assert_eq!(
            text,
            "#DIALOG d\n#TURN A t\nwe/PRP <sil=0.25> can't/MD^RB|tone,x10 go/VB|ip10:can um/UH_FP|et\n"
        );
        assert_eq!(parse_corpus(&text).unwrap(), c);
    }

    #[test]
    fn label_forms() {
        for s in ["ip10:mod", "ip10:can+", "ip:abr", "sr10<", "sr<", "m11", "r12", "x10", "x", "p13", "et", "tone", "ip20"] {
            assert_eq!(parse_label(s).unwrap().to_string(), s);
        }
        assert!(parse_label("q1").is_none());
        assert!(parse_label("ip10:foo").is_none());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_corpus("#DIALOG d\n#TURN A t\nok/AC bad/ZZ\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 7));
        assert_eq!(e.kind, ParseErrorKind::UnknownPos("ZZ".into()));

        let e = parse_corpus("#DIALOG d\n#TURN A t\nok/AC|m11\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::DanglingIndex(_)));

        let e = parse_corpus("#DIALOG d\n#TURN A t\nok\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));

        let e = parse_corpus("#TURN A t\n").unwrap_err();
        assert_eq!(e.line, 1);
    }
}
