//! Structured-naturalness toolkit: tree language models over ASTs,
//! Zipf statistics on AST labels and just-in-time defect prediction from
//! learned tree embeddings.

pub mod eval;
pub mod jit;
pub mod lm;
pub mod seed;
pub mod stats;
pub mod tree;
