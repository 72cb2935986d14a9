//! One-line nested text form of a tree.
//!
//! ```text
//! (Function "fn" (Name "f") (ParamList "(" ")") (Block "{" "}"))
//! ```
//!
//! Inner nodes are `(label child ...)`; leaves are double-quoted tokens with
//! `\"`, `\\`, `\n`, `\r` and `\t` escapes. An inner label that is not a
//! plain atom (contains whitespace, parentheses, quotes or backslashes) is
//! written quoted in head position. A tree that is a single leaf is written
//! as a bare quoted token.

use super::{AstTree, NodeId, TreeBuilder, TreeError};

fn is_atom(label: &str) -> bool {
    !label.is_empty() && label.chars().all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | '"' | '\\'))
}

fn push_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Canonical one-line rendering; `deserialize_tree` inverts it exactly.
pub fn serialize_tree(tree: &AstTree) -> String {
    let mut out = String::with_capacity(tree.len() * 8);
    write_node(tree, tree.root(), &mut out);
    out
}

fn write_node(tree: &AstTree, id: NodeId, out: &mut String) {
    let node = tree.node(id);
    if node.is_leaf() {
        push_quoted(out, &node.label);
        return;
    }
    out.push('(');
    if is_atom(&node.label) {
        out.push_str(&node.label);
    } else {
        push_quoted(out, &node.label);
    }
    for &c in &node.children {
        out.push(' ');
        write_node(tree, c, out);
    }
    out.push(')');
}

#[derive(Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
    Quoted(String),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl Lexer<'_> {
    fn err(pos: usize, msg: &str) -> TreeError {
        TreeError::Sexp { offset: pos, message: msg.to_string() }
    }

    fn next_tok(&mut self) -> Result<Option<(usize, Tok)>, TreeError> {
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else {
                break;
            }
        }
        let Some((pos, c)) = self.chars.next() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            '"' => {
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        None => return Err(Self::err(pos, "unterminated string")),
                        Some((_, '"')) => break,
                        Some((p, '\\')) => match self.chars.next() {
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 'r')) => s.push('\r'),
                            Some((_, 't')) => s.push('\t'),
                            _ => return Err(Self::err(p, "invalid escape")),
                        },
                        Some((_, ch)) => s.push(ch),
                    }
                }
                Tok::Quoted(s)
            }
            _ => {
                let mut s = String::from(c);
                while let Some(&(_, ch)) = self.chars.peek() {
                    if ch.is_whitespace() || matches!(ch, '(' | ')' | '"') {
                        break;
                    }
                    if ch == '\\' {
                        return Err(Self::err(pos, "backslash in bare atom"));
                    }
                    s.push(ch);
                    self.chars.next();
                }
                Tok::Atom(s)
            }
        };
        Ok(Some((pos, tok)))
    }
}

/// Parses one serialized tree. Trailing content after the tree is an error.
pub fn deserialize_tree(text: &str) -> Result<AstTree, TreeError> {
    let mut lex = Lexer { chars: text.char_indices().peekable() };
    let mut b = TreeBuilder::new();
    let mut depth = 0usize;
    let mut expect_head = false;
    let mut done = false;
    while let Some((pos, tok)) = lex.next_tok()? {
        if done {
            return Err(Lexer::err(pos, "trailing content after tree"));
        }
        if expect_head {
            match tok {
                Tok::Atom(s) | Tok::Quoted(s) => {
                    b.open(s)?;
                    expect_head = false;
                    continue;
                }
                _ => return Err(Lexer::err(pos, "expected a label after `(`")),
            }
        }
        match tok {
            Tok::Open => {
                depth += 1;
                expect_head = true;
            }
            Tok::Close => {
                if depth == 0 {
                    return Err(Lexer::err(pos, "unbalanced `)`"));
                }
                b.close().map_err(|_| Lexer::err(pos, "inner node without children"))?;
                depth -= 1;
                done = depth == 0;
            }
            Tok::Quoted(s) => {
                b.leaf(s)?;
                done = depth == 0;
            }
            Tok::Atom(s) => return Err(Lexer::err(pos, &format!("bare atom `{s}` outside head position"))),
        }
    }
    if depth != 0 || expect_head {
        return Err(Lexer::err(text.len(), "unexpected end of input"));
    }
    b.finish()
}
