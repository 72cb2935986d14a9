//! `.trees` interchange files: UTF-8, one serialized tree per line.
//!
//! An optional sidecar `<file>.ids` maps 1-based line numbers to source ids
//! as `line<TAB>source_id` rows.

use std::fs;
use std::path::{Path, PathBuf};

use super::{deserialize_tree, serialize_tree, AstTree, TreeError};

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

pub fn trees_to_text(trees: &[AstTree]) -> String {
    let mut out = String::new();
    for t in trees {
        out.push_str(&serialize_tree(t));
        out.push('\n');
    }
    out
}

pub fn trees_from_text(text: &str) -> Result<Vec<AstTree>, TreeError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| deserialize_tree(l).map_err(|e| TreeError::AtLine { line: i + 1, source: Box::new(e) }))
        .collect()
}

/// Trees keyed by their 1-based line number; blank lines are skipped.
pub fn trees_from_lines(text: &str) -> Result<Vec<(usize, AstTree)>, TreeError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            deserialize_tree(l).map(|t| (i + 1, t)).map_err(|e| TreeError::AtLine { line: i + 1, source: Box::new(e) })
        })
        .collect()
}

/// Writes `trees` and, when any tree carries a source id, the sidecar.
pub fn write_trees(path: &Path, trees: &[AstTree]) -> Result<(), TreeError> {
    fs::write(path, trees_to_text(trees))?;
    if trees.iter().any(|t| !t.source_id.is_empty()) {
        let mut ids = String::new();
        for (i, t) in trees.iter().enumerate() {
            ids.push_str(&format!("{}\t{}\n", i + 1, t.source_id));
        }
        fs::write(sidecar_path(path), ids)?;
    }
    Ok(())
}

/// Reads a `.trees` file, attaching source ids from the sidecar when present.
pub fn read_trees(path: &Path) -> Result<Vec<AstTree>, TreeError> {
    let text = fs::read_to_string(path)?;
    let mut trees = Vec::new();
    let mut line_of = Vec::new();
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            continue;
        }
        let t = deserialize_tree(l).map_err(|e| TreeError::AtLine { line: i + 1, source: Box::new(e) })?;
        trees.push(t);
        line_of.push(i + 1);
    }
    let side = sidecar_path(path);
    if side.exists() {
        let ids = fs::read_to_string(side)?;
        let mut by_line = std::collections::HashMap::new();
        for row in ids.lines().filter(|l| !l.is_empty()) {
            let (line, id) =
                row.split_once('\t').ok_or_else(|| TreeError::Malformed(format!("bad sidecar row `{row}`")))?;
            let line: usize = line.parse().map_err(|_| TreeError::Malformed(format!("bad sidecar row `{row}`")))?;
            by_line.insert(line, id.to_string());
        }
        for (t, line) in trees.iter_mut().zip(&line_of) {
            if let Some(id) = by_line.remove(line) {
                t.source_id = id;
            }
        }
    }
    Ok(trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_toy;

    #[test]
    fn file_round_trip_with_ids() {
        let dir = std::env::temp_dir().join(format!("astnat-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.trees");
        let trees = vec![
            parse_toy("fn f(a){return a;}").unwrap().with_source_id("one"),
            parse_toy("fn g(){return 1;}").unwrap().with_source_id("two"),
        ];
        write_trees(&path, &trees).unwrap();
        let back = read_trees(&path).unwrap();
        assert_eq!(back, trees);
        assert_eq!(back[1].source_id, "two");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bad_line_reports_position() {
        let err = trees_from_text("(A \"x\")\n(B\n").unwrap_err();
        assert!(matches!(err, TreeError::AtLine { line: 2, .. }));
    }
}
