use std::fmt;

use super::TreeError;

/// Dense index of a node inside an [`AstTree`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub label: String,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

impl AstNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Rooted, ordered, labeled tree.
///
/// Nodes are stored in pre-order, so the root is always node `0` and two
/// trees with the same shape and labels have identical node vectors. Leaves
/// carry tokens, inner nodes carry grammar labels.
#[derive(Clone)]
pub struct AstTree {
    nodes: Vec<AstNode>,
    /// Provenance of the tree (file, snippet or method id). Not part of
    /// structural equality.
    pub source_id: String,
}

impl PartialEq for AstTree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl Eq for AstTree {}

impl fmt::Debug for AstTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AstTree({})", super::sexp::serialize_tree(self))
    }
}

impl AstTree {
    /// A tree made of a single leaf.
    pub fn leaf(token: impl Into<String>) -> Result<Self, TreeError> {
        let mut b = TreeBuilder::new();
        b.leaf(token)?;
        b.finish()
    }

    /// Builds a tree from nodes in arbitrary order.
    ///
    /// The structure is validated (single root, consistent parent links,
    /// no cycles, non-empty labels) and renumbered into pre-order.
    pub fn from_nodes(nodes: Vec<AstNode>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::EmptyTree);
        }
        let roots: Vec<NodeId> = (0..nodes.len()).filter(|&i| nodes[i].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(TreeError::Malformed(format!("expected exactly one root, found {}", roots.len())));
        }
        let mut seen = vec![false; nodes.len()];
        let mut order = Vec::with_capacity(nodes.len());
        let mut stack = vec![roots[0]];
        while let Some(id) = stack.pop() {
            if seen[id] {
                return Err(TreeError::Malformed(format!("node {id} reached twice")));
            }
            seen[id] = true;
            order.push(id);
            let node = &nodes[id];
            if node.label.is_empty() {
                return Err(TreeError::Malformed(format!("node {id} has an empty label")));
            }
            for &c in node.children.iter().rev() {
                if c >= nodes.len() {
                    return Err(TreeError::Malformed(format!("child index {c} out of range")));
                }
                if nodes[c].parent != Some(id) {
                    return Err(TreeError::Malformed(format!("node {c} does not point back to parent {id}")));
                }
                stack.push(c);
            }
        }
        if order.len() != nodes.len() {
            return Err(TreeError::Malformed("unreachable nodes present".into()));
        }
        let mut remap = vec![0; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let renumbered = order
            .iter()
            .map(|&old| {
                let n = &nodes[old];
                AstNode {
                    label: n.label.clone(),
                    parent: n.parent.map(|p| remap[p]),
                    children: n.children.iter().map(|&c| remap[c]).collect(),
                }
            })
            .collect();
        Ok(AstTree { nodes: renumbered, source_id: String::new() })
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id].label
    }

    pub(crate) fn set_label(&mut self, id: NodeId, label: &str) {
        self.nodes[id].label.clear();
        self.nodes[id].label.push_str(label);
    }

    /// Leaf node ids, left to right.
    pub fn leaves(&self) -> Vec<NodeId> {
        // pre-order visits leaves left to right
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    /// Token sequence `t_1..t_n` read off the leaves left to right.
    pub fn leaf_sequence(&self) -> Vec<&str> {
        self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.label.as_str()).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn inner_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut best = 0;
        for (id, node) in self.nodes.iter().enumerate() {
            depth[id] = node.parent.map_or(1, |p| depth[p] + 1);
            best = best.max(depth[id]);
        }
        best
    }

    /// Size of the subtree rooted at every node.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1usize; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            if let Some(p) = self.nodes[id].parent {
                size[p] += size[id];
            }
        }
        size
    }

    /// Node ids of the subtree rooted at `id`, in pre-order.
    pub fn subtree(&self, id: NodeId) -> std::ops::Range<NodeId> {
        // pre-order numbering makes every subtree a contiguous range
        let size = self.subtree_len(id);
        id..id + size
    }

    fn subtree_len(&self, id: NodeId) -> usize {
        let mut last = id;
        while let Some(&c) = self.nodes[last].children.last() {
            last = c;
        }
        last - id + 1
    }

    /// Children-before-parent ordering (reverse pre-order is one such order).
    pub fn post_order(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).rev()
    }

    pub fn ancestors(&self, id: NodeId) -> Ancestors<'_> {
        Ancestors { tree: self, next: self.nodes[id].parent }
    }

    /// Rebuilds the tree with each node's children reordered by `order`.
    ///
    /// `order(node, children)` must return a permutation of `children`.
    pub fn reorder_children(&self, mut order: impl FnMut(NodeId, &[NodeId]) -> Vec<NodeId>) -> AstTree {
        let mut nodes = self.nodes.clone();
        for (id, node) in nodes.iter_mut().enumerate() {
            let new = order(id, &self.nodes[id].children);
            debug_assert_eq!(new.len(), node.children.len());
            node.children = new;
        }
        let mut t = AstTree::from_nodes(nodes).expect("child permutation keeps the tree valid");
        t.source_id = self.source_id.clone();
        t
    }
}

pub struct Ancestors<'a> {
    tree: &'a AstTree,
    next: Option<NodeId>,
}

impl Iterator for Ancestors<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let cur = self.next?;
        self.next = self.tree.nodes[cur].parent;
        Some(cur)
    }
}

/// Incremental pre-order construction: `open` an inner node, add children,
/// `close` it.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<AstNode>,
    open: Vec<NodeId>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, label: String) -> Result<NodeId, TreeError> {
        if label.is_empty() {
            return Err(TreeError::Malformed("empty label".into()));
        }
        let parent = self.open.last().copied();
        if parent.is_none() && !self.nodes.is_empty() {
            return Err(TreeError::Malformed("second root".into()));
        }
        let id = self.nodes.len();
        self.nodes.push(AstNode { label, parent, children: Vec::new() });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        Ok(id)
    }

    pub fn open(&mut self, label: impl Into<String>) -> Result<NodeId, TreeError> {
        let id = self.push(label.into())?;
        self.open.push(id);
        Ok(id)
    }

    pub fn leaf(&mut self, token: impl Into<String>) -> Result<NodeId, TreeError> {
        self.push(token.into())
    }

    pub fn close(&mut self) -> Result<(), TreeError> {
        let id = self.open.pop().ok_or_else(|| TreeError::Malformed("close without open".into()))?;
        if self.nodes[id].children.is_empty() {
            return Err(TreeError::Malformed(format!("inner node `{}` has no children", self.nodes[id].label)));
        }
        Ok(())
    }

    pub fn finish(self) -> Result<AstTree, TreeError> {
        if !self.open.is_empty() {
            return Err(TreeError::Malformed("unclosed inner node".into()));
        }
        if self.nodes.is_empty() {
            return Err(TreeError::EmptyTree);
        }
        Ok(AstTree { nodes: self.nodes, source_id: String::new() })
    }
}
