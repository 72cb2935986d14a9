use std::collections::HashMap;

use crate::tree::{AstTree, Vocabulary};

use super::report::{EntropyReport, FoldEntropy};
use super::{fold_partition, self_cross_entropy_ln, split, EvalError};

const START: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
struct History {
    total: u64,
    next: HashMap<u32, u64>,
}

/// Jelinek–Mercer interpolated n-gram model over vocabulary ids plus an
/// end-of-sequence event.
///
/// `P(w | h) = Σ_i λ_i P_i(w | h)` with uniform `λ_i = 1/n`. The order-1 term
/// is add-one smoothed over all events. A higher-order term whose history was
/// never seen falls back to the next lower order, so every mixture component
/// is itself a distribution.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    events: usize,
    lambdas: Vec<f64>,
    unigram: Vec<u64>,
    unigram_total: u64,
    /// `tables[i]` holds histories of length `i + 1`.
    tables: Vec<HashMap<Vec<u32>, History>>,
}

impl NgramModel {
    pub fn train(order: usize, vocab_len: usize, sequences: &[Vec<u32>]) -> Result<Self, EvalError> {
        if order == 0 {
            return Err(EvalError::InvalidOrder);
        }
        let events = vocab_len + 1;
        let mut m = NgramModel {
            order,
            events,
            lambdas: vec![1.0 / order as f64; order],
            unigram: vec![0; events],
            unigram_total: 0,
            tables: vec![HashMap::new(); order - 1],
        };
        for seq in sequences {
            let padded = m.pad(seq);
            for j in order - 1..padded.len() {
                let w = padded[j];
                m.unigram[w as usize] += 1;
                m.unigram_total += 1;
                for len in 1..order {
                    let h = padded[j - len..j].to_vec();
                    let e = m.tables[len - 1].entry(h).or_default();
                    e.total += 1;
                    *e.next.entry(w).or_default() += 1;
                }
            }
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Number of predictable events: vocabulary ids plus end-of-sequence.
    pub fn events(&self) -> usize {
        self.events
    }

    pub fn end_id(&self) -> u32 {
        (self.events - 1) as u32
    }

    fn pad(&self, seq: &[u32]) -> Vec<u32> {
        let mut p = vec![START; self.order - 1];
        p.extend_from_slice(seq);
        p.push(self.end_id());
        p
    }

    /// `P(w | context)`, where `context` holds at least `order − 1` preceding
    /// ids (start sentinels are implied for a shorter context).
    pub fn prob(&self, context: &[u32], w: u32) -> f64 {
        let mut padded = vec![START; (self.order - 1).saturating_sub(context.len())];
        padded.extend_from_slice(&context[context.len().saturating_sub(self.order - 1)..]);
        self.prob_padded(&padded, w)
    }

    fn prob_padded(&self, ctx: &[u32], w: u32) -> f64 {
        let mut p = (self.unigram[w as usize] + 1) as f64 / (self.unigram_total + self.events as u64) as f64;
        let mut mix = self.lambdas[0] * p;
        for len in 1..self.order {
            let h = &ctx[ctx.len() - len..];
            if let Some(hist) = self.tables[len - 1].get(h) {
                p = hist.next.get(&w).copied().unwrap_or(0) as f64 / hist.total as f64;
            }
            mix += self.lambdas[len] * p;
        }
        mix
    }

    /// Full next-event distribution after `context`.
    pub fn distribution(&self, context: &[u32]) -> Vec<f64> {
        (0..self.events as u32).map(|w| self.prob(context, w)).collect()
    }

    /// Natural-log probability of every event of `seq`, its end included.
    pub fn sequence_log_probs(&self, seq: &[u32]) -> Vec<f64> {
        let padded = self.pad(seq);
        (self.order - 1..padded.len()).map(|j| self.prob_padded(&padded[..j], padded[j]).ln()).collect()
    }
}

fn leaf_ids(tree: &AstTree, vocab: &Vocabulary) -> Vec<u32> {
    tree.leaves().into_iter().map(|l| vocab.encode(tree.label(l))).collect()
}

/// Cross-validated per-event entropy of an order-`n` model over leaf
/// sequences. Uses the same fold partition as the tree model for `seed`.
pub fn ngram_baseline(
    corpus: &[AstTree],
    vocab: &Vocabulary,
    n: usize,
    folds: usize,
    seed: u64,
    k: usize,
) -> Result<EntropyReport, EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidOrder);
    }
    let groups = fold_partition(corpus.len(), folds, seed)?;
    let seqs: Vec<Vec<u32>> = corpus.iter().map(|t| leaf_ids(t, vocab)).collect();
    let mut per_fold = Vec::with_capacity(folds);
    for f in 0..folds {
        let (train_idx, test_idx) = split(&groups, f);
        let train: Vec<Vec<u32>> = train_idx.iter().map(|&i| seqs[i].clone()).collect();
        let model = NgramModel::train(n, vocab.len(), &train)?;
        let lps: Vec<f64> = test_idx.iter().flat_map(|&i| model.sequence_log_probs(&seqs[i])).collect();
        per_fold.push(FoldEntropy { fold: f, entropy_bits: self_cross_entropy_ln(&lps)?, n_examples: lps.len() });
    }
    Ok(EntropyReport::new(per_fold, k, &format!("ngram-{n}")))
}
