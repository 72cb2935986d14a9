use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{AstTree, TreeError};

pub const MASK_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const MASK_LABEL: &str = "<mask>";
pub const UNK_LABEL: &str = "<unk>";

/// Bidirectional label ↔ id map with reserved `MASK = 0` and `UNK = 1`.
///
/// Ordinary entries are ordered by descending corpus count, ties broken
/// lexicographically, so the same corpus always yields the same ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Counts every label (inner and leaf) across `trees`.
    pub fn build(trees: &[AstTree]) -> Result<Self, TreeError> {
        if trees.is_empty() {
            return Err(TreeError::EmptyCorpus);
        }
        let mut tally: HashMap<&str, u64> = HashMap::new();
        for t in trees {
            for n in t.nodes() {
                *tally.entry(n.label.as_str()).or_default() += 1;
            }
        }
        let mut rows: Vec<(&str, u64)> = tally.into_iter().collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_rows(rows.into_iter().map(|(l, c)| (l.to_string(), c)))
    }

    /// Assembles a vocabulary from ordinary `(label, count)` rows in id order
    /// (reserved entries are prepended).
    pub fn from_rows(rows: impl IntoIterator<Item = (String, u64)>) -> Result<Self, TreeError> {
        let mut entries = vec![MASK_LABEL.to_string(), UNK_LABEL.to_string()];
        let mut counts = vec![0, 0];
        for (label, count) in rows {
            if label == MASK_LABEL || label == UNK_LABEL {
                return Err(TreeError::ReservedLabel(label));
            }
            entries.push(label);
            counts.push(count);
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.clone(), i as u32).is_some() {
                return Err(TreeError::Malformed(format!("duplicate vocabulary entry `{e}`")));
            }
        }
        Ok(Vocabulary { entries, counts, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn encode(&self, label: &str) -> u32 {
        self.index.get(label).copied().unwrap_or(UNK_ID)
    }

    /// Id of `label`, or `None` when it is out of vocabulary.
    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn decode(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// SHA-256 over the ordered entries; identifies the id assignment a
    /// checkpoint was trained against.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update((e.len() as u64).to_le_bytes());
            h.update(e.as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Text form: a header line, then `id<TAB>count<TAB>"label"` per entry.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# astnat vocabulary v1\n");
        for (i, (e, c)) in self.entries.iter().zip(&self.counts).enumerate() {
            let quoted = super::sexp::serialize_tree(&AstTree::leaf(e.as_str()).expect("non-empty label"));
            let _ = writeln!(out, "{i}\t{c}\t{quoted}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TreeError> {
        let mut lines = text.lines();
        if lines.next() != Some("# astnat vocabulary v1") {
            return Err(TreeError::Malformed("missing vocabulary header".into()));
        }
        let mut rows = Vec::new();
        for (expect, line) in lines.enumerate() {
            let bad = || TreeError::Malformed(format!("bad vocabulary line {}: {line}", expect + 2));
            let mut parts = line.splitn(3, '\t');
            let id: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let count: u64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let leaf = super::sexp::deserialize_tree(parts.next().ok_or_else(bad)?)?;
            if id != expect || leaf.len() != 1 {
                return Err(bad());
            }
            let label = leaf.label(0).to_string();
            let reserved = match id {
                0 => Some(MASK_LABEL),
                1 => Some(UNK_LABEL),
                _ => None,
            };
            match reserved {
                Some(r) if r != label => return Err(bad()),
                Some(_) => {}
                None => rows.push((label, count)),
            }
        }
        Self::from_rows(rows)
    }
}

pub fn build_vocabulary(trees: &[AstTree]) -> Result<Vocabulary, TreeError> {
    Vocabulary::build(trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::deserialize_tree;

    #[test]
    fn single_tree_counts() {
        let t = deserialize_tree(r#"(A "x" "x")"#).unwrap();
        let v = Vocabulary::build(&[t]).unwrap();
        assert_eq!(v.entries(), &[MASK_LABEL, UNK_LABEL, "x", "A"]);
        assert_eq!(v.count(v.encode("x")), 2);
        assert_eq!(v.count(v.encode("A")), 1);
        assert_eq!(v.encode("never-seen"), UNK_ID);
        assert_eq!(v.decode(v.encode("A")), Some("A"));
    }

    #[test]
    fn ties_are_lexicographic() {
        let t = deserialize_tree(r#"(b "c" "a")"#).unwrap();
        let v = Vocabulary::build(&[t]).unwrap();
        assert_eq!(&v.entries()[2..], &["a", "b", "c"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(Vocabulary::build(&[]), Err(TreeError::EmptyCorpus)));
        let t = deserialize_tree(r#"(A "<mask>")"#).unwrap();
        assert!(matches!(Vocabulary::build(&[t]), Err(TreeError::ReservedLabel(_))));
    }

    #[test]
    fn text_round_trip() {
        let t = deserialize_tree(r#"(A "x y" "\t" (B "x y"))"#).unwrap();
        let v = Vocabulary::build(&[t]).unwrap();
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.hash(), v.hash());
    }
}
