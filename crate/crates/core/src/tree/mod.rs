//! AST data model, interchange format, toy-language front end, corpus
//! filtering, vocabulary and target masking.

mod ast;
mod filter;
pub mod generate;
pub mod io;
mod mask;
mod sexp;
mod toy;
mod vocab;

pub use ast::{Ancestors, AstNode, AstTree, NodeId, TreeBuilder};
pub use filter::{filter_corpus, TrivialityRule};
pub use mask::{branching_lca, make_masked_example, make_masked_example_seeded, mask_target, MaskedExample};
pub use sexp::{deserialize_tree, serialize_tree};
pub use toy::{parse_toy, parse_toy_unit};
pub use vocab::{build_vocabulary, Vocabulary, MASK_ID, MASK_LABEL, UNK_ID, UNK_LABEL};

#[derive(Debug, thiserror::Error)]
pub enum TreeError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("tree text error at byte {offset}: {message}")]
    Sexp { offset: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<TreeError>,
    },
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("node {0} is not a leaf")]
    NotALeaf(NodeId),
    #[error("tree has no leaves")]
    EmptyTree,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("label `{0}` is reserved")]
    ReservedLabel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
