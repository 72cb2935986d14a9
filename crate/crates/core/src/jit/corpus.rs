//! Commit corpus files: one tab-separated record per line,
//!
//! ```text
//! commit_id  timestamp  label  provenance  method_id=line,method_id=line,...
//! ```
//!
//! `label` is `0` or `1`; each `line` is a 1-based line number in the
//! companion `.trees` file holding the method ASTs. Blank lines and lines
//! starting with `#` are skipped.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::tree::io::trees_from_lines;
use crate::tree::{serialize_tree, AstTree};

use super::{CommitRecord, JitError};

fn corpus_err(line: usize, message: impl Into<String>) -> JitError {
    JitError::Corpus { line, message: message.into() }
}

fn check_field(line: usize, what: &str, value: &str) -> Result<(), JitError> {
    if value.is_empty() || value.contains(['\t', '\n', ',', '=']) {
        return Err(corpus_err(line, format!("invalid {what} `{value}`")));
    }
    Ok(())
}

/// Parses a commit file against the lines of its `.trees` companion.
pub fn commits_from_text(commits: &str, trees: &str) -> Result<Vec<CommitRecord>, JitError> {
    let trees: BTreeMap<usize, AstTree> = trees_from_lines(trees)?.into_iter().collect();
    let mut out = Vec::new();
    for (i, row) in commits.lines().enumerate() {
        let line = i + 1;
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = row.split('\t').collect();
        let [commit_id, ts, label, provenance, methods] = cols[..] else {
            return Err(corpus_err(line, format!("expected 5 fields, found {}", cols.len())));
        };
        check_field(line, "commit id", commit_id)?;
        let timestamp = ts.parse().map_err(|_| corpus_err(line, format!("bad timestamp `{ts}`")))?;
        let label = match label {
            "0" => false,
            "1" => true,
            other => return Err(corpus_err(line, format!("label must be 0 or 1, found `{other}`"))),
        };
        let mut ms = Vec::new();
        for m in methods.split(',').filter(|m| !m.is_empty()) {
            let (id, tline) = m.split_once('=').ok_or_else(|| corpus_err(line, format!("bad method `{m}`")))?;
            let tline: usize = tline.parse().map_err(|_| corpus_err(line, format!("bad tree line `{tline}`")))?;
            let tree = trees.get(&tline).ok_or_else(|| corpus_err(line, format!("no tree on line {tline}")))?;
            ms.push((id.to_string(), tree.clone()));
        }
        if ms.is_empty() {
            return Err(JitError::EmptyCommit(commit_id.to_string()));
        }
        out.push(CommitRecord {
            commit_id: commit_id.to_string(),
            timestamp,
            methods: ms,
            label,
            provenance: provenance.to_string(),
        });
    }
    Ok(out)
}

/// Renders `(commit file, trees file)`; method trees are written in commit
/// order.
pub fn commits_to_text(commits: &[CommitRecord]) -> Result<(String, String), JitError> {
    let (mut c, mut t) = (String::new(), String::new());
    let mut next = 1;
    for (i, r) in commits.iter().enumerate() {
        check_field(i + 1, "commit id", &r.commit_id)?;
        if r.provenance.contains(['\t', '\n']) {
            return Err(corpus_err(i + 1, "provenance contains a tab or newline"));
        }
        let mut refs = Vec::new();
        for (id, tree) in &r.methods {
            check_field(i + 1, "method id", id)?;
            t.push_str(&serialize_tree(tree));
            t.push('\n');
            refs.push(format!("{id}={next}"));
            next += 1;
        }
        c.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.commit_id,
            r.timestamp,
            u8::from(r.label),
            r.provenance,
            refs.join(",")
        ));
    }
    Ok((c, t))
}

pub fn read_commits(commits: &Path, trees: &Path) -> Result<Vec<CommitRecord>, JitError> {
    commits_from_text(&fs::read_to_string(commits)?, &fs::read_to_string(trees)?)
}

pub fn write_commits(commits_path: &Path, trees_path: &Path, commits: &[CommitRecord]) -> Result<(), JitError> {
    let (c, t) = commits_to_text(commits)?;
    fs::write(commits_path, c)?;
    fs::write(trees_path, t)?;
    Ok(())
}
