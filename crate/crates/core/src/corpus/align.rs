use super::{CorrKind, Correspondence, RepairAnnotation, Turn};

/// Result of aligning a reparandum with an alteration. Indices are relative
/// to the two input slices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Aligned {
    pub pairs: Vec<(usize, usize, CorrKind)>,
    pub deleted: Vec<usize>,
    pub inserted: Vec<usize>,
}

/// Objective maximized by the aligner: two points per match, one per replacement.
pub fn alignment_score(pairs: &[(usize, usize, CorrKind)]) -> u32 {
    pairs
        .iter()
        .map(|(_, _, k)| match k {
            CorrKind::Match => 2,
            CorrKind::Replace => 1,
            _ => 0,
        })
        .sum()
}

fn pair_kind(a: (&str, &str), b: (&str, &str)) -> Option<CorrKind> {
    if a.1 != b.1 {
        None
    } else if a.0 == b.0 {
        Some(CorrKind::Match)
    } else {
        Some(CorrKind::Replace)
    }
}

fn pair_score(a: (&str, &str), b: (&str, &str)) -> u32 {
    match pair_kind(a, b) {
        Some(CorrKind::Match) => 2,
        Some(_) => 1,
        None => 0,
    }
}

/// Maximal non-crossing alignment of `(surface, pos)` words. Among optimal
/// alignments the lexicographically smallest pair sequence is returned.
pub fn align(rep: &[(&str, &str)], alt: &[(&str, &str)]) -> Aligned {
    let (n, m) = (rep.len(), alt.len());
    let mut best = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let s = pair_score(rep[i], alt[j]);
            let mut v = best[i + 1][j].max(best[i][j + 1]);
            if s > 0 {
                v = v.max(s + best[i + 1][j + 1]);
            }
            best[i][j] = v;
        }
    }
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m && best[i][j] > 0 {
        let target = best[i][j];
        let (pi, pj) = (i..n)
            .flat_map(|a| (j..m).map(move |b| (a, b)))
            .find(|&(a, b)| {
                let s = pair_score(rep[a], alt[b]);
                s > 0 && s + best[a + 1][b + 1] == target
            })
            .expect("an optimal pair exists while the score is positive");
        pairs.push((pi, pj, pair_kind(rep[pi], alt[pj]).unwrap()));
        i = pi + 1;
        j = pj + 1;
    }
    let deleted = (0..n).filter(|a| !pairs.iter().any(|p| p.0 == *a)).collect();
    let last = pairs.last().map_or(0, |p| p.1 + 1);
    let inserted = (0..last).filter(|b| !pairs.iter().any(|p| p.1 == *b)).collect();
    Aligned { pairs, deleted, inserted }
}

/// Fills the correspondences of `repair` by aligning its reparandum with the
/// words that follow its editing term.
///
/// The alteration window runs from the alteration onset to the next
/// interruption point (or the end of the turn), skipping editing-term words,
/// and holds at most twice the reparandum length plus two words.
pub fn derive_correspondences(repair: &RepairAnnotation, turn: &Turn) -> RepairAnnotation {
    let key = |p: usize| (turn.tokens[p].surface.as_str(), turn.tokens[p].pos.as_str());
    let rep_pos: Vec<usize> = repair.reparandum().filter(|&p| !turn.tokens[p].is_et()).collect();
    let cap = 2 * rep_pos.len() + 2;
    let mut alt_pos = Vec::new();
    for p in repair.alteration_onset()..turn.tokens.len() {
        let tok = &turn.tokens[p];
        if tok.pos == crate::tags::TURN || alt_pos.len() >= cap {
            break;
        }
        if !tok.is_et() {
            alt_pos.push(p);
        }
        if tok.labels.iter().any(|l| matches!(l, super::Label::Ip { .. })) {
            break;
        }
    }
    let rep_words: Vec<_> = rep_pos.iter().map(|&p| key(p)).collect();
    let alt_words: Vec<_> = alt_pos.iter().map(|&p| key(p)).collect();
    let aligned = align(&rep_words, &alt_words);
    let mut correspondences: Vec<Correspondence> = aligned
        .pairs
        .iter()
        .map(|&(a, b, kind)| Correspondence {
            reparandum: Some(rep_pos[a]),
            alteration: Some(alt_pos[b]),
            kind,
        })
        .collect();
    correspondences.extend(aligned.deleted.iter().map(|&a| Correspondence {
        reparandum: Some(rep_pos[a]),
        alteration: None,
        kind: CorrKind::Delete,
    }));
    correspondences.extend(aligned.inserted.iter().map(|&b| Correspondence {
        reparandum: None,
        alteration: Some(alt_pos[b]),
        kind: CorrKind::Insert,
    }));
    correspondences.sort_by_key(|c| (c.reparandum, c.alteration));
    RepairAnnotation { correspondences, ..repair.clone() }
}
