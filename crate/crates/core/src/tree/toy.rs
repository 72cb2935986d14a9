//! Parser for the toy language used to build self-contained corpora.
//!
//! The grammar is documented in `docs/toy-language.md`. Every token of the
//! source becomes a leaf; binary operator levels only produce a node when an
//! operator is present, so `a + b * c` yields
//! `(AddExpr (Name "a") "+" (MulExpr (Name "b") "*" (Name "c")))`.

use super::{AstTree, TreeBuilder, TreeError};

const KEYWORDS: &[&str] = &["fn", "let", "if", "else", "while", "return", "true", "false"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Ident,
    Number,
    Keyword,
    Punct,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    text: String,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, TreeError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        let (kind, len) = if c.is_ascii_alphabetic() || c == '_' {
            let len = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').count();
            let word: String = chars[i..i + len].iter().collect();
            (if KEYWORDS.contains(&word.as_str()) { Kind::Keyword } else { Kind::Ident }, len)
        } else if c.is_ascii_digit() {
            let len = chars[i..].iter().take_while(|c| c.is_ascii_digit()).count();
            if chars.get(i + len).is_some_and(|c| c.is_ascii_alphabetic() || *c == '_') {
                return Err(syntax(start, "malformed number literal"));
            }
            (Kind::Number, len)
        } else {
            let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
            if ["==", "!=", "<=", ">=", "&&", "||"].contains(&two.as_str()) {
                (Kind::Punct, 2)
            } else if "(){},;=+-*/%<>!".contains(c) {
                (Kind::Punct, 1)
            } else {
                return Err(syntax(start, &format!("unexpected character `{c}`")));
            }
        };
        out.push(Token { kind, text: chars[i..i + len].iter().collect(), line: start.0, column: start.1 });
        i += len;
        col += len;
    }
    Ok(out)
}

fn syntax((line, column): (usize, usize), message: &str) -> TreeError {
    TreeError::Syntax { line, column, message: message.to_string() }
}

/// Intermediate syntax node; flattened into an [`AstTree`] once a whole
/// function has been parsed (binary levels need look-ahead before their node
/// can be opened).
enum Syn {
    Leaf(String),
    Node(&'static str, Vec<Syn>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text && t.kind != Kind::Ident && t.kind != Kind::Number)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.eof, |t| (t.line, t.column))
    }

    fn err<T>(&self, message: &str) -> Result<T, TreeError> {
        let found = self.peek().map_or("end of input".to_string(), |t| format!("`{}`", t.text));
        Err(syntax(self.here(), &format!("{message}, found {found}")))
    }

    fn expect(&mut self, text: &str) -> Result<Syn, TreeError> {
        if self.peek_is(text) {
            self.pos += 1;
            Ok(Syn::Leaf(text.to_string()))
        } else {
            self.err(&format!("expected `{text}`"))
        }
    }

    fn ident(&mut self) -> Result<Syn, TreeError> {
        match self.peek() {
            Some(t) if t.kind == Kind::Ident => {
                let s = t.text.clone();
                self.pos += 1;
                Ok(Syn::Leaf(s))
            }
            _ => self.err("expected identifier"),
        }
    }

    fn function(&mut self) -> Result<Syn, TreeError> {
        let mut kids = vec![self.expect("fn")?];
        kids.push(Syn::Node("Name", vec![self.ident()?]));
        let mut params = vec![self.expect("(")?];
        if !self.peek_is(")") {
            loop {
                params.push(Syn::Node("Param", vec![self.ident()?]));
                if self.peek_is(",") {
                    params.push(self.expect(",")?);
                } else {
                    break;
                }
            }
        }
        params.push(self.expect(")")?);
        kids.push(Syn::Node("ParamList", params));
        kids.push(self.block()?);
        Ok(Syn::Node("Function", kids))
    }

    fn block(&mut self) -> Result<Syn, TreeError> {
        let mut kids = vec![self.expect("{")?];
        while !self.peek_is("}") {
            if self.peek().is_none() {
                return self.err("expected `}`");
            }
            kids.push(self.statement()?);
        }
        kids.push(self.expect("}")?);
        Ok(Syn::Node("Block", kids))
    }

    fn statement(&mut self) -> Result<Syn, TreeError> {
        if self.peek_is("let") {
            let kids = vec![
                self.expect("let")?,
                Syn::Node("Name", vec![self.ident()?]),
                self.expect("=")?,
                self.expr()?,
                self.expect(";")?,
            ];
            return Ok(Syn::Node("LetStmt", kids));
        }
        if self.peek_is("if") {
            let mut kids = vec![self.expect("if")?, self.expect("(")?, self.expr()?, self.expect(")")?, self.block()?];
            if self.peek_is("else") {
                kids.push(Syn::Node("ElseClause", vec![self.expect("else")?, self.block()?]));
            }
            return Ok(Syn::Node("IfStmt", kids));
        }
        if self.peek_is("while") {
            let kids = vec![self.expect("while")?, self.expect("(")?, self.expr()?, self.expect(")")?, self.block()?];
            return Ok(Syn::Node("WhileStmt", kids));
        }
        if self.peek_is("return") {
            let mut kids = vec![self.expect("return")?];
            if !self.peek_is(";") {
                kids.push(self.expr()?);
            }
            kids.push(self.expect(";")?);
            return Ok(Syn::Node("ReturnStmt", kids));
        }
        let is_assign = self.peek().is_some_and(|t| t.kind == Kind::Ident)
            && self.toks.get(self.pos + 1).is_some_and(|t| t.text == "=" && t.kind == Kind::Punct);
        if is_assign {
            let kids = vec![Syn::Node("Name", vec![self.ident()?]), self.expect("=")?, self.expr()?, self.expect(";")?];
            return Ok(Syn::Node("AssignStmt", kids));
        }
        let e = self.expr()?;
        Ok(Syn::Node("ExprStmt", vec![e, self.expect(";")?]))
    }

    fn expr(&mut self) -> Result<Syn, TreeError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Syn, TreeError> {
        const LEVELS: &[(&str, &[&str], bool)] = &[
            ("OrExpr", &["||"], true),
            ("AndExpr", &["&&"], true),
            ("CmpExpr", &["==", "!=", "<", "<=", ">", ">="], false),
            ("AddExpr", &["+", "-"], true),
            ("MulExpr", &["*", "/", "%"], true),
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let (label, ops, repeat) = LEVELS[level];
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = ops.iter().find(|op| self.peek_is(op)) {
            let op = self.expect(op)?;
            let rhs = self.binary(level + 1)?;
            lhs = Syn::Node(label, vec![lhs, op, rhs]);
            if !repeat {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Syn, TreeError> {
        for op in ["!", "-"] {
            if self.peek_is(op) {
                let op = self.expect(op)?;
                return Ok(Syn::Node("UnaryExpr", vec![op, self.unary()?]));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Syn, TreeError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("expected expression");
        };
        match tok.kind {
            Kind::Number => {
                self.pos += 1;
                Ok(Syn::Node("Number", vec![Syn::Leaf(tok.text)]))
            }
            Kind::Keyword if tok.text == "true" || tok.text == "false" => {
                self.pos += 1;
                Ok(Syn::Node("Bool", vec![Syn::Leaf(tok.text)]))
            }
            Kind::Ident => {
                let name = Syn::Node("Name", vec![self.ident()?]);
                if !self.peek_is("(") {
                    return Ok(name);
                }
                let mut args = vec![self.expect("(")?];
                if !self.peek_is(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.peek_is(",") {
                            args.push(self.expect(",")?);
                        } else {
                            break;
                        }
                    }
                }
                args.push(self.expect(")")?);
                Ok(Syn::Node("Call", vec![name, Syn::Node("ArgList", args)]))
            }
            Kind::Punct if tok.text == "(" => {
                let kids = vec![self.expect("(")?, self.expr()?, self.expect(")")?];
                Ok(Syn::Node("ParenExpr", kids))
            }
            _ => self.err("expected expression"),
        }
    }
}

fn emit(syn: &Syn, b: &mut TreeBuilder) -> Result<(), TreeError> {
    match syn {
        Syn::Leaf(s) => {
            b.leaf(s.clone())?;
        }
        Syn::Node(label, kids) => {
            b.open(*label)?;
            for k in kids {
                emit(k, b)?;
            }
            b.close()?;
        }
    }
    Ok(())
}

fn eof_position(source: &str) -> (usize, usize) {
    let line = source.matches('\n').count() + 1;
    let column = source.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses every function definition in `source`, one tree per function.
pub fn parse_toy_unit(source: &str) -> Result<Vec<AstTree>, TreeError> {
    let mut p = Parser { toks: lex(source)?, pos: 0, eof: eof_position(source) };
    if p.toks.is_empty() {
        return p.err("expected `fn`");
    }
    let mut trees = Vec::new();
    while p.peek().is_some() {
        let syn = p.function()?;
        let mut b = TreeBuilder::new();
        emit(&syn, &mut b)?;
        trees.push(b.finish()?);
    }
    Ok(trees)
}

/// Parses a source holding exactly one function definition.
pub fn parse_toy(source: &str) -> Result<AstTree, TreeError> {
    let mut p = Parser { toks: lex(source)?, pos: 0, eof: eof_position(source) };
    let syn = p.function()?;
    if p.peek().is_some() {
        return p.err("expected end of input after function");
    }
    let mut b = TreeBuilder::new();
    emit(&syn, &mut b)?;
    b.finish()
}
