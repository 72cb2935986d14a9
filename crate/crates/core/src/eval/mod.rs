//! Cross-validated self-cross-entropy of the tree model, the sequence-length
//! sweep and an interpolated n-gram baseline over leaf sequences.

mod ngram;
mod report;

use rand::seq::SliceRandom;

use crate::lm::{target_log_probs, train, EncodedExample, ModelError, TrainConfig};
use crate::seed::{derive_seed, rng_for};
use crate::tree::{filter_corpus, make_masked_example, AstTree, TreeError, TrivialityRule, Vocabulary};

pub use ngram::{ngram_baseline, NgramModel};
pub use report::{fold_summary_csv, plot_csv, report_csv, summary_csv, EntropyReport, FoldEntropy, SweepPoint};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("need at least {needed} examples, found {found}")]
    TooFewExamples { needed: usize, found: usize },
    #[error("prediction {0} has zero probability")]
    ZeroProbability(usize),
    #[error("prediction {index} has invalid probability {value}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("no predictions to average")]
    Empty,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("sweep limits must be non-empty and ascending")]
    InvalidSweep,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// `−(1/n) Σ log2 p_i` over the probabilities assigned to the true targets.
pub fn self_cross_entropy(probs: &[f64]) -> Result<f64, EvalError> {
    if probs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut total = 0.0;
    for (index, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            return Err(EvalError::ZeroProbability(index));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(EvalError::InvalidProbability { index, value: p });
        }
        total -= p.log2();
    }
    Ok(total / probs.len() as f64)
}

/// Same as [`self_cross_entropy`] from natural-log probabilities, which stay
/// finite where the probability itself would underflow.
pub fn self_cross_entropy_ln(log_probs: &[f64]) -> Result<f64, EvalError> {
    if log_probs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut total = 0.0;
    for (index, &lp) in log_probs.iter().enumerate() {
        if lp == f64::NEG_INFINITY {
            return Err(EvalError::ZeroProbability(index));
        }
        if !(lp <= 0.0) {
            return Err(EvalError::InvalidProbability { index, value: lp.exp() });
        }
        total -= lp;
    }
    Ok(total / std::f64::consts::LN_2 / log_probs.len() as f64)
}

/// Seeded partition of `0..n` into `folds` groups whose sizes differ by at
/// most one. Each group is sorted.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if folds == 0 || n < folds {
        return Err(EvalError::TooFewExamples { needed: folds.max(1), found: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, "folds", 0));
    let base = n / folds;
    let extra = n % folds;
    let mut groups = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut g = idx[start..start + size].to_vec();
        g.sort_unstable();
        groups.push(g);
        start += size;
    }
    Ok(groups)
}

/// Training and held-out indices for fold `f`.
pub(crate) fn split(groups: &[Vec<usize>], f: usize) -> (Vec<usize>, &[usize]) {
    let train = groups.iter().enumerate().filter(|(g, _)| *g != f).flat_map(|(_, g)| g.iter().copied()).collect();
    (train, &groups[f])
}

/// Held-out examples for fold `fold`: one masked target per tree, drawn from
/// a fold-specific RNG so every model sees the same targets.
pub fn heldout_examples(
    trees: &[&AstTree],
    vocab: &Vocabulary,
    seed: u64,
    fold: usize,
) -> Result<Vec<EncodedExample>, EvalError> {
    let mut rng = rng_for(seed, "heldout-mask", fold as u64);
    trees
        .iter()
        .map(|t| {
            let m = make_masked_example(t, vocab, &mut rng)?;
            Ok(EncodedExample::from_masked(&m, vocab)?)
        })
        .collect()
}

/// K-fold cross-validated self-cross-entropy of the tree model.
///
/// `config.seed` fixes the fold partition, the held-out masks and, through a
/// derived seed per fold, each fold's training run.
pub fn cross_validate(
    corpus: &[AstTree],
    vocab: &Vocabulary,
    config: &TrainConfig,
    k: usize,
    folds: usize,
) -> Result<EntropyReport, EvalError> {
    let groups = fold_partition(corpus.len(), folds, config.seed)?;
    let mut per_fold = Vec::with_capacity(folds);
    for f in 0..folds {
        let (train_idx, test_idx) = split(&groups, f);
        let train_set: Vec<AstTree> = train_idx.iter().map(|&i| corpus[i].clone()).collect();
        let fold_cfg = TrainConfig { seed: derive_seed(config.seed, "fold", f as u64), ..config.clone() };
        let outcome = train(&train_set, vocab, &fold_cfg, k)?;
        let test: Vec<&AstTree> = test_idx.iter().map(|&i| &corpus[i]).collect();
        let examples = heldout_examples(&test, vocab, config.seed, f)?;
        let lps = target_log_probs(&examples, &outcome.checkpoint.params);
        per_fold.push(FoldEntropy { fold: f, entropy_bits: self_cross_entropy_ln(&lps)?, n_examples: examples.len() });
    }
    Ok(EntropyReport::new(per_fold, k, "treelstm"))
}

/// Filters the corpus at every `k` and cross-validates each subset. A `k`
/// that leaves fewer trees than folds becomes a gap.
pub fn length_sweep(
    corpus: &[AstTree],
    vocab: &Vocabulary,
    config: &TrainConfig,
    ks: &[usize],
    folds: usize,
    rule: TrivialityRule,
) -> Result<Vec<SweepPoint>, EvalError> {
    if ks.is_empty() || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidSweep);
    }
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let subset = filter_corpus(corpus, k, rule);
        match cross_validate(&subset, vocab, config, k, folds) {
            Ok(r) => out.push(SweepPoint::Report(r)),
            Err(EvalError::TooFewExamples { found, .. }) => out.push(SweepPoint::Gap { k, n_trees: found }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Control corpus with the same shapes, inner labels and multiset of leaf
/// tokens, but with the tokens randomly permuted across the whole corpus.
pub fn token_shuffled_control(corpus: &[AstTree], seed: u64) -> Vec<AstTree> {
    let mut tokens: Vec<String> =
        corpus.iter().flat_map(|t| t.leaves().into_iter().map(move |l| t.label(l).to_string())).collect();
    tokens.shuffle(&mut rng_for(seed, "token-shuffle", 0));
    let mut next = tokens.into_iter();
    corpus
        .iter()
        .map(|t| {
            let mut nodes = t.nodes().to_vec();
            for n in nodes.iter_mut().filter(|n| n.is_leaf()) {
                n.label = next.next().expect("token count preserved");
            }
            AstTree::from_nodes(nodes).expect("shape preserved").with_source_id(t.source_id.clone())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_closed_forms() {
        assert_eq!(self_cross_entropy(&[1.0]).unwrap(), 0.0);
        assert_eq!(self_cross_entropy(&vec![1.0 / 256.0; 256]).unwrap(), 8.0);
        assert_eq!(self_cross_entropy(&[0.5, 0.25]).unwrap(), 1.5);
        assert!(matches!(self_cross_entropy(&[0.5, 0.0]), Err(EvalError::ZeroProbability(1))));
        assert!(matches!(self_cross_entropy(&[1.5]), Err(EvalError::InvalidProbability { .. })));
        assert!((self_cross_entropy_ln(&[0.5f64.ln(), 0.25f64.ln()]).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        for seed in 0..20 {
            let g = fold_partition(23, 5, seed).unwrap();
            let mut all: Vec<usize> = g.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..23).collect::<Vec<_>>());
            assert!(g.iter().all(|x| x.len() == 4 || x.len() == 5));
        }
        assert!(matches!(fold_partition(3, 5, 0), Err(EvalError::TooFewExamples { needed: 5, found: 3 })));
    }
}
