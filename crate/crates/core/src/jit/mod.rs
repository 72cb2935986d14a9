//! Just-in-time defect prediction from method embeddings: longitudinal
//! folds, ENN under-sampling, a random forest, commit tainting and
//! commit-level metrics.

mod corpus;
mod enn;
mod forest;
mod metrics;
mod synthetic;

use std::collections::BTreeMap;
use std::ops::Range;

use crate::lm::{embed, ModelCheckpoint, ModelError};
use crate::seed::derive_seed;
use crate::tree::{AstTree, TreeError, Vocabulary};

pub use corpus::{commits_from_text, commits_to_text, read_commits, write_commits};
pub use enn::enn_undersample;
pub use forest::{forest_predict, forest_train, max_features, DecisionTree, ForestModel, Node};
pub use metrics::{metrics, metrics_csv, Confusion, FoldId, FoldMetrics, Metrics, METRICS_HEADER};
pub use synthetic::{randomize_labels, synthetic_vectors, SyntheticJit};

#[derive(Debug, thiserror::Error)]
pub enum JitError {
    #[error("need at least 10 commits, found {0}")]
    TooFewCommits(usize),
    #[error("checkpoint was trained with k={checkpoint}, features need k={configured}")]
    CheckpointMismatch { checkpoint: usize, configured: usize },
    #[error("both classes must be present")]
    MissingClass,
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("commit {0} has no methods")]
    EmptyCommit(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("commit corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitRecord {
    pub commit_id: String,
    /// Epoch seconds.
    pub timestamp: i64,
    pub methods: Vec<(String, AstTree)>,
    pub label: bool,
    /// Where the label came from, e.g. the SZZ run that produced it.
    pub provenance: String,
}

/// One method embedding with the label of its commit.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    pub features: Vec<f64>,
    pub label: bool,
    pub commit_id: String,
    pub method_id: String,
    pub timestamp: i64,
}

/// Sorts by timestamp, ties broken by commit id.
pub fn sort_chronologically(commits: &mut [CommitRecord]) {
    commits.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.commit_id.cmp(&b.commit_id)));
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldRange {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

/// Expanding-window folds over `n` chronologically sorted commits: fold `i`
/// trains on the first `⌊(20 + 15i)% · n⌋` commits and tests on the next
/// `⌊n / 10⌋`.
pub fn longitudinal_split(n: usize, folds: usize) -> Result<Vec<FoldRange>, JitError> {
    if n < 10 {
        return Err(JitError::TooFewCommits(n));
    }
    if folds == 0 || folds > 5 {
        return Err(JitError::InvalidConfig(format!("longitudinal folds must be 1..=5, got {folds}")));
    }
    Ok((0..folds)
        .map(|i| {
            let train_end = (20 + 15 * i) * n / 100;
            FoldRange { train: 0..train_end, test: train_end..train_end + n / 10 }
        })
        .collect())
}

/// One embedding per method AST, labelled with its commit's label.
pub fn featurize(
    commits: &[CommitRecord],
    checkpoint: &ModelCheckpoint,
    vocab: &Vocabulary,
    k: usize,
) -> Result<Vec<LabeledVector>, JitError> {
    if checkpoint.max_len != k {
        return Err(JitError::CheckpointMismatch { checkpoint: checkpoint.max_len, configured: k });
    }
    let mut out = Vec::new();
    for c in commits {
        if c.methods.is_empty() {
            return Err(JitError::EmptyCommit(c.commit_id.clone()));
        }
        for (method_id, tree) in &c.methods {
            out.push(LabeledVector {
                features: embed(tree, checkpoint, vocab)?,
                label: c.label,
                commit_id: c.commit_id.clone(),
                method_id: method_id.clone(),
                timestamp: c.timestamp,
            });
        }
    }
    Ok(out)
}

/// A commit is defect-inducing when any of its methods is.
pub fn taint_commit(method_predictions: &[bool]) -> Result<bool, JitError> {
    if method_predictions.is_empty() {
        return Err(JitError::EmptyCommit(String::new()));
    }
    Ok(method_predictions.iter().any(|p| *p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JitConfig {
    pub folds: usize,
    /// Sequence-length limit the embedding checkpoint must have been
    /// trained with.
    pub k: usize,
    pub n_trees: usize,
    pub enn_k: usize,
    pub undersample: bool,
    pub seed: u64,
}

impl Default for JitConfig {
    fn default() -> Self {
        JitConfig { folds: 5, k: 30, n_trees: 200, enn_k: 3, undersample: false, seed: 0 }
    }
}

struct CommitGroup {
    label: bool,
    vectors: Vec<usize>,
}

fn group_commits(vectors: &[LabeledVector]) -> Result<Vec<CommitGroup>, JitError> {
    let mut by_key: BTreeMap<(i64, &str), CommitGroup> = BTreeMap::new();
    let mut seen: BTreeMap<&str, i64> = BTreeMap::new();
    for (i, v) in vectors.iter().enumerate() {
        if let Some(ts) = seen.insert(&v.commit_id, v.timestamp) {
            if ts != v.timestamp {
                return Err(JitError::InvalidConfig(format!("commit {} has two timestamps", v.commit_id)));
            }
        }
        let g =
            by_key.entry((v.timestamp, &v.commit_id)).or_insert(CommitGroup { label: v.label, vectors: Vec::new() });
        if g.label != v.label {
            return Err(JitError::InvalidConfig(format!("commit {} has mixed labels", v.commit_id)));
        }
        g.vectors.push(i);
    }
    Ok(by_key.into_values().collect())
}

/// Longitudinal evaluation over method vectors. Commits are ordered by
/// timestamp then id; each fold trains a forest on the training commits'
/// methods (after ENN when `undersample`), predicts every test method and
/// taints each test commit. Returns one row per fold followed by an overall
/// row over the predictions pooled across folds.
pub fn run_jit_vectors(vectors: &[LabeledVector], config: &JitConfig) -> Result<Vec<FoldMetrics>, JitError> {
    let commits = group_commits(vectors)?;
    let folds = longitudinal_split(commits.len(), config.folds)?;
    let mut rows = Vec::with_capacity(folds.len() + 1);
    let (mut all_true, mut all_pred) = (Vec::new(), Vec::new());
    for (f, range) in folds.iter().enumerate() {
        let mut train: Vec<LabeledVector> =
            commits[range.train.clone()].iter().flat_map(|c| c.vectors.iter().map(|&i| vectors[i].clone())).collect();
        if config.undersample {
            train = enn_undersample(&train, config.enn_k)?;
        }
        let x: Vec<Vec<f64>> = train.iter().map(|v| v.features.clone()).collect();
        let y: Vec<bool> = train.iter().map(|v| v.label).collect();
        let forest = forest_train(&x, &y, config.n_trees, derive_seed(config.seed, "jit-forest", f as u64))?;
        let (mut y_true, mut y_pred) = (Vec::new(), Vec::new());
        for c in &commits[range.test.clone()] {
            let preds = c
                .vectors
                .iter()
                .map(|&i| forest_predict(&forest, &vectors[i].features).map(|p| p.0))
                .collect::<Result<Vec<_>, _>>()?;
            y_true.push(c.label);
            y_pred.push(taint_commit(&preds)?);
        }
        rows.push(FoldMetrics {
            fold: FoldId::Fold(f),
            undersampled: config.undersample,
            metrics: metrics(&y_true, &y_pred)?,
        });
        all_true.extend(y_true);
        all_pred.extend(y_pred);
    }
    rows.push(FoldMetrics {
        fold: FoldId::Overall,
        undersampled: config.undersample,
        metrics: metrics(&all_true, &all_pred)?,
    });
    Ok(rows)
}

/// Featurizes `commits` with the checkpoint and runs [`run_jit_vectors`].
pub fn run_jit_pipeline(
    commits: &[CommitRecord],
    checkpoint: &ModelCheckpoint,
    vocab: &Vocabulary,
    config: &JitConfig,
) -> Result<Vec<FoldMetrics>, JitError> {
    let vectors = featurize(commits, checkpoint, vocab, config.k)?;
    run_jit_vectors(&vectors, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_boundaries_for_one_hundred() {
        let f = longitudinal_split(100, 5).unwrap();
        assert_eq!(f[0], FoldRange { train: 0..20, test: 20..30 });
        assert_eq!(f[4], FoldRange { train: 0..80, test: 80..90 });
        assert!(matches!(longitudinal_split(9, 5), Err(JitError::TooFewCommits(9))));
    }

    #[test]
    fn taint_is_or() {
        assert!(taint_commit(&[false, false, true]).unwrap());
        assert!(!taint_commit(&[false, false]).unwrap());
        assert!(matches!(taint_commit(&[]), Err(JitError::EmptyCommit(_))));
    }
}
