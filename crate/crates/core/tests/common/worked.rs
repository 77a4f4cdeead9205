//! Hand-annotated turns and the context checks run along them.

use super::ScriptedSource;
use dialm_core::corpus::{derive_gold_tags, normalize_corpus, parse_corpus, GoldTag, GoldTurn};
use dialm_core::lm::state::{CAN_MARKER, MOD_MARKER, PUSH_MARKER};
use dialm_core::lm::{expand, follow_gold_path, Expansion, LmConfig, State};
use dialm_core::silence::gap_before;
use dialm_core::tags::{EditTag, RepairTag, FRAGMENT, POS_TAGS};

pub const WORKED: &str = include_str!("../data/worked_examples.txt");

pub fn turns() -> Vec<GoldTurn> {
    let corpus = normalize_corpus(&parse_corpus(WORKED).unwrap()).unwrap();
    corpus.turns().map(|t| derive_gold_tags(t).unwrap()).collect()
}

pub fn turn(id: &str) -> GoldTurn {
    turns().into_iter().find(|t| t.id == id).unwrap()
}

pub fn tagset() -> Vec<String> {
    POS_TAGS.iter().copied().chain([FRAGMENT]).map(String::from).collect()
}

pub fn detection() -> LmConfig {
    LmConfig { tones: true, repairs: true, beam: usize::MAX, ..LmConfig::pos_only() }
}

pub fn correction() -> LmConfig {
    LmConfig { correction: true, ..detection() }
}

/// Follows `tags` through the decoder, failing on the first word with no
/// matching expansion.
pub fn walk(src: &ScriptedSource, cfg: &LmConfig, g: &GoldTurn, tags: &[GoldTag]) -> Vec<Expansion> {
    let mut st = State::new();
    let mut out = Vec::new();
    for i in 0..g.len() {
        let want = cfg.project(tags[i]);
        let x = expand(src, cfg, &st, &g.words[i], gap_before(&g.words, &g.silences, i))
            .into_iter()
            .find(|x| x.tags == want && src.tags[x.pos] == g.pos[i])
            .unwrap_or_else(|| panic!("{}: no expansion for word {i} with {want:?}", g.id));
        st = x.state.clone();
        out.push(x);
    }
    out
}

/// Context as (POS, word) pairs, without the word just added.
pub fn context(x: &Expansion) -> Vec<(String, String)> {
    let ctx = &x.state.ctx;
    ctx[..ctx.len() - 1].iter().map(|i| (i.pos.to_string(), i.word.to_string())).collect()
}

pub fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
    items.iter().map(|(p, w)| (p.to_string(), w.to_string())).collect()
}

pub fn cleanup_holds(g: &GoldTurn, cfg: &LmConfig) {
    let src = ScriptedSource::new(tagset());
    let path = follow_gold_path(&src, cfg, &g.words, &g.silences, &g.tags, &g.pos);
    assert_eq!(path.len(), g.len(), "{}: gold path incomplete", g.id);
    for (i, x) in path.iter().enumerate() {
        let mut expected: Vec<usize> = Vec::new();
        for p in 0..=i {
            let popped = g.repairs.iter().any(|r| r.onset <= i && r.editing_term.contains(&p));
            let removed = cfg.correction && g.repairs.iter().any(|r| r.onset <= i && r.removed.contains(&p));
            if !popped && !removed {
                expected.push(p);
            }
        }
        let words: Vec<usize> = x.state.ctx.iter().filter_map(|it| it.position).collect();
        assert_eq!(words, expected, "{} word {i}", g.id);

        let in_et = matches!(x.tags.e, EditTag::Push | EditTag::Et);
        let pushes = x.state.ctx.iter().filter(|it| &*it.pos == PUSH_MARKER).count();
        assert_eq!(pushes, usize::from(in_et), "{} word {i}: push markers", g.id);

        let before = context(x).last().map(|(p, _)| p.clone()).unwrap_or_default();
        match x.tags.r {
            RepairTag::Can => assert_eq!(before, CAN_MARKER, "{} word {i}", g.id),
            RepairTag::Mod if !cfg.correction => assert_eq!(before, MOD_MARKER, "{} word {i}", g.id),
            RepairTag::Mod => assert!(x.state.ctx.iter().all(|it| &*it.pos != MOD_MARKER)),
            _ => {}
        }
        if i > 0 && path[i - 1].tags.r == RepairTag::Can {
            let at = path[i - 1].state.ctx.len() - 2;
            assert_eq!(&*x.state.ctx[at].pos, CAN_MARKER, "{} word {i}: can marker dropped", g.id);
        }
    }
}
