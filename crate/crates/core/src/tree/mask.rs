use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{Vocabulary, MASK_LABEL};
use super::{AstTree, NodeId, TreeError};

/// Nearest ancestor of `leaf` with at least two children, or the root when
/// every ancestor is unary (a root leaf is its own answer).
pub fn branching_lca(tree: &AstTree, leaf: NodeId) -> Result<NodeId, TreeError> {
    if leaf >= tree.len() {
        return Err(TreeError::Malformed(format!("node {leaf} out of range")));
    }
    if !tree.node(leaf).is_leaf() {
        return Err(TreeError::NotALeaf(leaf));
    }
    Ok(tree.ancestors(leaf).find(|&a| tree.node(a).children.len() >= 2).unwrap_or(tree.root()))
}

/// A tree with one prediction target hidden.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedExample {
    /// Input tree: same shape as the original, with every label strictly
    /// below `masked_subtree_root`, the target leaf, and every other
    /// occurrence of the target token replaced by [`MASK_LABEL`].
    pub tree: AstTree,
    pub target_leaf: NodeId,
    pub target_token: u32,
    pub masked_subtree_root: NodeId,
}

/// Masks the leakage region of a fixed target leaf.
pub fn mask_target(tree: &AstTree, target_leaf: NodeId, vocab: &Vocabulary) -> Result<MaskedExample, TreeError> {
    let lca = branching_lca(tree, target_leaf)?;
    let token = tree.label(target_leaf).to_string();
    let mut masked = tree.clone();
    // strict descendants of the LCA; the LCA keeps its label unless it is
    // the target itself
    for id in tree.subtree(lca).skip(1) {
        masked.set_label(id, MASK_LABEL);
    }
    masked.set_label(target_leaf, MASK_LABEL);
    // The same token elsewhere in the tree would reveal the answer.
    for id in 0..tree.len() {
        if tree.label(id) == token {
            masked.set_label(id, MASK_LABEL);
        }
    }
    Ok(MaskedExample { tree: masked, target_leaf, target_token: vocab.encode(&token), masked_subtree_root: lca })
}

/// Picks a target leaf uniformly at random and masks its leakage region.
pub fn make_masked_example<R: Rng + ?Sized>(
    tree: &AstTree,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<MaskedExample, TreeError> {
    let leaves = tree.leaves();
    if leaves.is_empty() {
        return Err(TreeError::EmptyTree);
    }
    let target = leaves[rng.random_range(0..leaves.len())];
    mask_target(tree, target, vocab)
}

pub fn make_masked_example_seeded(tree: &AstTree, vocab: &Vocabulary, seed: u64) -> Result<MaskedExample, TreeError> {
    make_masked_example(tree, vocab, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{deserialize_tree, parse_toy};

    fn vocab_of(t: &AstTree) -> Vocabulary {
        Vocabulary::build(std::slice::from_ref(t)).unwrap()
    }

    #[test]
    fn direct_parent_with_two_children() {
        let t = deserialize_tree(r#"(A (B "x" "y") "z")"#).unwrap();
        // leaves x=2, y=3
        assert_eq!(branching_lca(&t, 2).unwrap(), 1);
        assert_eq!(branching_lca(&t, 4).unwrap(), 0);
    }

    #[test]
    fn unary_chain_falls_back_to_root() {
        let t = deserialize_tree(r#"(R (U1 (U2 "x")))"#).unwrap();
        assert_eq!(branching_lca(&t, 3).unwrap(), 0);
        let lone = AstTree::leaf("x").unwrap();
        assert_eq!(branching_lca(&lone, 0).unwrap(), 0);
    }

    #[test]
    fn inner_node_is_not_a_leaf() {
        let t = deserialize_tree(r#"(A "x" "y")"#).unwrap();
        assert!(matches!(branching_lca(&t, 0), Err(TreeError::NotALeaf(0))));
    }

    #[test]
    fn single_leaf_tree_is_fully_masked() {
        let t = AstTree::leaf("x").unwrap();
        let ex = make_masked_example_seeded(&t, &vocab_of(&t), 3).unwrap();
        assert_eq!((ex.target_leaf, ex.masked_subtree_root), (0, 0));
        assert_eq!(ex.tree.label(0), MASK_LABEL);
    }

    #[test]
    fn unary_chain_keeps_root_label() {
        let t = deserialize_tree(r#"(Expr (Paren "x"))"#).unwrap();
        let ex = make_masked_example_seeded(&t, &vocab_of(&t), 3).unwrap();
        assert_eq!(ex.target_leaf, 2);
        assert_eq!(ex.masked_subtree_root, 0);
        let labels: Vec<_> = ex.tree.nodes().iter().map(|n| n.label.as_str()).collect();
        assert_eq!(labels, ["Expr", MASK_LABEL, MASK_LABEL]);
    }

    #[test]
    fn repeated_token_outside_region_is_hidden() {
        let t = parse_toy("fn f(a){return a;}").unwrap();
        let v = vocab_of(&t);
        // second `a` sits under ReturnStmt; the parameter `a` is outside it
        let target = t.leaves()[7];
        let ex = mask_target(&t, target, &v).unwrap();
        assert_eq!(ex.target_token, v.encode("a"));
        assert!(ex.tree.nodes().iter().all(|n| n.label != "a"));
        assert_eq!(ex.tree.label(ex.masked_subtree_root), "ReturnStmt");
        assert!(t.subtree(ex.masked_subtree_root).skip(1).all(|id| ex.tree.label(id) == MASK_LABEL));
        // untouched outside the region
        assert_eq!(ex.tree.label(0), "Function");
    }

    #[test]
    fn lone_leaf_has_a_target() {
        let t = AstTree::leaf("x").unwrap();
        let v = vocab_of(&t);
        assert!(make_masked_example_seeded(&t, &v, 0).is_ok());
    }
}
