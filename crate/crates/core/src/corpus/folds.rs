use super::{Corpus, CorpusError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Dialog indices of one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions dialogs into `k` test sets. Dialogs are never split, and
/// dialogs of the same speaker pair are dealt round-robin so each pair is
/// spread over as many folds as possible.
pub fn partition_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Fold>, CorpusError> {
    let n = corpus.dialogs.len();
    if k < 2 || k > n {
        return Err(CorpusError::TooManyFolds { k, dialogs: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut groups: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for &d in &order {
        let speakers: BTreeSet<String> =
            corpus.dialogs[d].turns.iter().map(|t| t.speaker.clone()).collect();
        groups.entry(speakers.into_iter().collect()).or_default().push(d);
    }
    let mut tests = vec![Vec::new(); k];
    let mut next = 0;
    for dialogs in groups.values() {
        for &d in dialogs {
            tests[next % k].push(d);
            next += 1;
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..n).filter(|d| !test.contains(d)).collect();
            Fold { train, test }
        })
        .collect())
}

/// Splits `n` turn indices into growing and heldout sets; the growing set
/// gets `round(ratio * n)` turns.
pub fn split_growing_heldout(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((ratio.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut growing = idx[..cut].to_vec();
    let mut heldout = idx[cut..].to_vec();
    growing.sort_unstable();
    heldout.sort_unstable();
    (growing, heldout)
}
