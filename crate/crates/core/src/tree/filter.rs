use super::AstTree;

/// When a tree counts as degenerate and is dropped from a corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrivialityRule {
    /// Keep every tree.
    Disabled,
    /// A tree is trivial when it is a near-pure chain,
    /// `depth - 1 >= chain_ratio * node_count`, or when a single root child
    /// holds at least `root_dominance` of all nodes while every other root
    /// child is a leaf.
    Degenerate { chain_ratio: f64, root_dominance: f64 },
}

impl Default for TrivialityRule {
    fn default() -> Self {
        TrivialityRule::Degenerate { chain_ratio: 0.9, root_dominance: 0.95 }
    }
}

impl TrivialityRule {
    pub fn is_trivial(&self, tree: &AstTree) -> bool {
        let TrivialityRule::Degenerate { chain_ratio, root_dominance } = *self else {
            return false;
        };
        let n = tree.len() as f64;
        if (tree.depth() - 1) as f64 >= chain_ratio * n {
            return true;
        }
        let root = tree.node(tree.root());
        if root.children.is_empty() {
            return false;
        }
        let sizes = tree.subtree_sizes();
        root.children.iter().any(|&dom| {
            sizes[dom] as f64 >= root_dominance * n && root.children.iter().all(|&c| c == dom || tree.node(c).is_leaf())
        })
    }
}

/// Keeps trees with at most `max_len` leaves that are not trivial under
/// `rule`, preserving input order.
pub fn filter_corpus(trees: &[AstTree], max_len: usize, rule: TrivialityRule) -> Vec<AstTree> {
    trees.iter().filter(|t| t.leaf_count() <= max_len && !rule.is_trivial(t)).cloned().collect()
}
