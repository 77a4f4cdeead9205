//! Context cleanup and scoring along hand-annotated turns.

mod common;

use common::worked::{cleanup_holds, context, correction, detection, pairs, tagset, turn, turns, walk};
use common::{pair, Row, ScriptedSource};
use dialm_core::corpus::GoldTag;
use dialm_core::lm::{expand, Expansion, Factors, LmConfig};
use dialm_core::tags::{Corr, RepairTag, FRAGMENT};

#[test]
fn contexts_are_cleaned_on_every_worked_example() {
    let collapsed = LmConfig { collapse_repairs: true, ..correction() };
    for g in turns() {
        for cfg in [detection(), correction(), collapsed] {
            cleanup_holds(&g, &cfg);
        }
    }
}

#[test]
fn editing_term_context_during_and_after() {
    let g = turn("utt47");
    let src = ScriptedSource::new(tagset());
    let path = walk(&src, &detection(), &g, &g.tags);
    assert_eq!(context(&path[3]), pairs(&[("PRP", "it"), ("VBP", "takes"), ("CD", "one"), ("PUSH", "PUSH")]));
    assert_eq!(context(&path[5]), pairs(&[("PRP", "it"), ("VBP", "takes"), ("CD", "one"), ("MOD", "MOD")]));

    let path = walk(&src, &correction(), &g, &g.tags);
    assert_eq!(context(&path[3]).last().unwrap().0, "PUSH");
    assert_eq!(context(&path[5]), pairs(&[("PRP", "it"), ("VBP", "takes")]));
}

#[test]
fn filled_pause_starting_an_editing_term() {
    let g = turn("utt95");
    assert_eq!(g.words[9], "um");
    let mut src = ScriptedSource::new(tagset());
    src.rows.insert(
        9,
        Row {
            tone: Some(pair(0, 0.9997, 1)),
            edit: Some(pair(1, 0.2422, 0)),
            pos: vec![("UH_FP", 0.7307), ("AC", 0.1771), ("CC_D", 0.0255), ("UH_D", 0.0200), ("VB", 0.0255)],
            word: Some(0.5084),
            ..Row::default()
        },
    );
    let path = walk(&src, &correction(), &g, &g.tags);
    let f = path[9].factors;
    assert_eq!((f.r, f.o, f.l, f.c), (1.0, 1.0, 1.0, 1.0));
    // Scripted scores carry four digits.
    assert!((f.product() - 0.0898).abs() < 2e-4, "{}", f.product());
}

#[test]
fn onset_scores_normalize_over_the_nine_candidates() {
    let g = turn("utt95");
    assert_eq!(g.words[13], "total");
    let scores = [0.0031, 0.0031, 0.0474, 0.0474, 0.0161, 0.0232, 0.1446, 0.1262, 0.5891];
    let mut src = ScriptedSource::new(tagset());
    src.rows.insert(
        13,
        Row {
            tone: Some(pair(1, 0.9018, 0)),
            edit: Some(pair(3, 0.8303, 2)),
            repair: Some([0.0, 0.2281, 0.6436, 0.1283]),
            onset: scores.iter().copied().enumerate().collect(),
            licensor: vec![("total", 0.973)],
            corr: Some([0.588, 0.206, 0.206]),
            ..Row::default()
        },
    );
    let cfg = correction();
    let path = walk(&src, &cfg, &g, &g.tags);
    let st = &path[12].state;
    assert_eq!(st.onset_candidates(), &[0, 1, 2, 3, 4, 5, 6, 7, 8]);

    let mods: Vec<Expansion> = expand(&src, &cfg, st, "total", None)
        .into_iter()
        .filter(|x| x.tags.r == RepairTag::Mod && x.tags.c.is_none_or(|c| c != Corr::X))
        .collect();
    let o = |p: usize| mods.iter().find(|x| x.tags.o == Some(p)).unwrap().factors.o;
    let z: f64 = scores.iter().sum();
    assert!((o(8) - 0.5891 / z).abs() < 1e-12);
    assert!((o(7) - 0.1262 / z).abs() < 1e-12);
    assert!((o(8) - 0.589).abs() < 5e-4 && (o(7) - 0.126).abs() < 5e-4);

    let f = path[13].factors;
    assert_eq!((f.p, f.w), (1.0, 1.0));
    assert!((f.product() - 0.0123).abs() < 1e-4, "{}", f.product());
}

/// Factors in column order T, E, R, O, L, C, P, W.
fn columns(f: &Factors) -> [f64; 8] {
    [f.t, f.e, f.r, f.o, f.l, f.c, f.p, f.w]
}

fn script(src: &mut ScriptedSource, rows: Vec<(usize, Row)>) {
    src.rows.extend(rows);
}

fn fluent(t: f64, e: f64, r: f64) -> Row {
    Row { tone: Some(pair(0, t, 1)), edit: Some(pair(0, e, 1)), repair: Some(pair(0, r, 1)), ..Row::default() }
}

fn corr(c: Corr, v: f64) -> Option<[f64; 3]> {
    let mut out = [(1.0 - v) / 2.0; 3];
    out[c.index()] = v;
    Some(out)
}

/// Rows shared by both readings of the overlapping repairs, starting at
/// the word after "a.m.".
fn shared_rows() -> Vec<(usize, Row)> {
    vec![
        (16, Row { tone: Some(pair(1, 0.579, 0)), pos: vec![("PRP", 0.064)], word: Some(0.076), ..fluent(1.0, 0.997, 0.993) }),
        (17, Row { pos: vec![("HAVEP", 0.123)], word: Some(0.840), ..fluent(0.999, 1.0, 0.996) }),
        (18, Row { pos: vec![(FRAGMENT, 0.013)], word: Some(1.0), ..fluent(0.986, 0.996, 0.991) }),
    ]
}

#[test]
fn overlapping_repairs_prefer_the_correct_reading() {
    let g = turn("utt37");
    assert_eq!(&g.words[15..23], ["a.m.", "you", "have", "<fragment>", "one", "you", "have", "two"]);
    let cfg = LmConfig { collapse_repairs: true, ..correction() };

    let mut right = ScriptedSource::new(tagset());
    script(&mut right, shared_rows());
    script(
        &mut right,
        vec![
            (19, Row { repair: Some(pair(1, 0.676, 0)), onset: vec![(18, 0.535)], pos: vec![("CD", 0.122)], word: Some(0.162), ..fluent(1.0, 0.915, 0.0) }),
            (20, Row { repair: Some(pair(1, 0.224, 0)), onset: vec![(16, 0.198)], licensor: vec![("you", 0.957)], corr: corr(Corr::M, 0.864), ..fluent(0.808, 0.877, 0.0) }),
            (21, Row { licensor: vec![("have", 0.973)], corr: corr(Corr::M, 0.783), ..fluent(0.999, 1.0, 0.996) }),
            (22, Row { licensor: vec![("one", 1.0)], corr: corr(Corr::R, 0.083), word: Some(0.290), ..fluent(0.959, 0.990, 0.950) }),
        ],
    );
    let correct = walk(&right, &cfg, &g, &g.tags);

    let mut wrong = ScriptedSource::new(tagset());
    script(&mut wrong, shared_rows());
    script(
        &mut wrong,
        vec![
            (19, Row { repair: Some(pair(1, 0.676, 0)), onset: vec![(16, 0.367)], licensor: vec![("you", 0.967)], corr: corr(Corr::X, 0.123), pos: vec![("CD", 0.009)], word: Some(0.327), ..fluent(1.0, 0.915, 0.0) }),
            (20, Row { licensor: vec![("you", 0.778)], corr: corr(Corr::M, 0.092), ..fluent(0.918, 0.988, 0.702) }),
            (21, Row { licensor: vec![("have", 1.0)], corr: corr(Corr::M, 0.783), ..fluent(0.878, 0.999, 0.997) }),
            (22, Row { pos: vec![("CD", 0.122)], word: Some(0.290), ..fluent(0.959, 0.990, 0.950) }),
        ],
    );
    let mut tags = g.tags.clone();
    tags[19] = GoldTag { r: RepairTag::Mod, o: Some(16), l: Some(1), c: Some(Corr::X), ..GoldTag::default() };
    tags[20] = GoldTag { l: Some(1), c: Some(Corr::M), ..GoldTag::default() };
    tags[21] = GoldTag { l: Some(1), c: Some(Corr::M), ..GoldTag::default() };
    tags[22] = GoldTag::default();
    let incorrect = walk(&wrong, &cfg, &g, &tags);

    let right_rows: [[f64; 8]; 7] = [
        [0.579, 0.997, 0.993, 1.0, 1.0, 1.0, 0.064, 0.076],
        [0.999, 1.0, 0.996, 1.0, 1.0, 1.0, 0.123, 0.840],
        [0.986, 0.996, 0.991, 1.0, 1.0, 1.0, 0.013, 1.0],
        [1.0, 0.915, 0.676, 0.535, 1.0, 1.0, 0.122, 0.162],
        [0.808, 0.877, 0.224, 0.198, 0.957, 0.864, 1.0, 1.0],
        [0.999, 1.0, 0.996, 1.0, 0.973, 0.783, 1.0, 1.0],
        [0.959, 0.990, 0.950, 1.0, 1.0, 0.083, 1.0, 0.290],
    ];
    let wrong_rows: [[f64; 8]; 4] = [
        [1.0, 0.915, 0.676, 0.367, 0.967, 0.123, 0.009, 0.327],
        [0.918, 0.988, 0.702, 1.0, 0.778, 0.092, 1.0, 1.0],
        [0.878, 0.999, 0.997, 1.0, 1.0, 0.783, 1.0, 1.0],
        [0.959, 0.990, 0.950, 1.0, 1.0, 1.0, 0.122, 0.290],
    ];
    for (k, want) in right_rows.iter().enumerate() {
        let got = columns(&correct[16 + k].factors);
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "correct row {k}: {got:?}");
        }
    }
    for (k, want) in wrong_rows.iter().enumerate() {
        let got = columns(&incorrect[19 + k].factors);
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "incorrect row {k}: {got:?}");
        }
    }

    let score = |path: &[Expansion]| path[19..23].iter().map(|x| x.factors.product()).product::<f64>();
    let ratio = score(&incorrect) / score(&correct);
    assert!(ratio < 1.0);
    // Factors carry three digits, so the ratio is only good to about 0.002.
    assert!((ratio - 0.029).abs() < 0.002, "{ratio}");
}
