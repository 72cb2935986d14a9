use crate::tree::{AstTree, MaskedExample, Vocabulary};

use super::ModelError;

/// A tree with labels replaced by vocabulary ids, in pre-order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTree {
    pub labels: Vec<u32>,
    pub children: Vec<Vec<usize>>,
}

impl EncodedTree {
    /// Fails with `UnencodableLabel` on any out-of-vocabulary label.
    pub fn encode_strict(tree: &AstTree, vocab: &Vocabulary) -> Result<Self, ModelError> {
        let labels = tree
            .nodes()
            .iter()
            .map(|n| vocab.get(&n.label).ok_or_else(|| ModelError::UnencodableLabel(n.label.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::with_labels(tree, labels))
    }

    /// Maps out-of-vocabulary labels to `UNK`.
    pub fn encode_lossy(tree: &AstTree, vocab: &Vocabulary) -> Self {
        let labels = tree.nodes().iter().map(|n| vocab.encode(&n.label)).collect();
        Self::with_labels(tree, labels)
    }

    fn with_labels(tree: &AstTree, labels: Vec<u32>) -> Self {
        let children = tree.nodes().iter().map(|n| n.children.clone()).collect();
        EncodedTree { labels, children }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Encoded input tree plus the id the model should predict.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub tree: EncodedTree,
    pub target: u32,
}

impl EncodedExample {
    pub fn from_masked(example: &MaskedExample, vocab: &Vocabulary) -> Result<Self, ModelError> {
        if example.target_token as usize >= vocab.len() {
            return Err(ModelError::UnencodableLabel(format!("target id {}", example.target_token)));
        }
        Ok(EncodedExample { tree: EncodedTree::encode_strict(&example.tree, vocab)?, target: example.target_token })
    }
}
