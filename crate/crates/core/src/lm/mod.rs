//! Child-Sum TreeLSTM language model over masked ASTs.

mod adam;
mod checkpoint;
mod encode;
mod model;
mod network;
mod params;
pub mod tensor;
mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{ModelCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use encode::{EncodedExample, EncodedTree};
pub use model::{
    cell_forward, embed_tree, forward_encoded, loss_and_gradients, loss_and_gradients_encoded, target_log_probs,
    tree_forward, TreeOutput,
};
pub use network::{log_sum_exp, softmax};
pub use params::{ModelDims, ModelParams, TENSOR_NAMES};
pub use train::{train, train_from, TrainConfig, TrainOutcome};

use crate::tree::TreeError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("label `{0}` is not in the vocabulary")]
    UnencodableLabel(String),
    #[error("non-finite gradient in `{0}`")]
    NonFiniteGradient(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("tree {index} has {leaves} leaves, limit is {max_len}")]
    TreeTooLong { index: usize, leaves: usize, max_len: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("vocabulary hash {found} does not match checkpoint {expected}")]
    VocabMismatch { expected: String, found: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Embeds a tree with a trained checkpoint.
pub fn embed(
    tree: &crate::tree::AstTree,
    checkpoint: &ModelCheckpoint,
    vocab: &crate::tree::Vocabulary,
) -> Result<Vec<f64>, ModelError> {
    checkpoint.check_vocab(vocab)?;
    embed_tree(tree, vocab, &checkpoint.params)
}
