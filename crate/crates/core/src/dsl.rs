//! Text format for graph manifolds.
//!
//! ```text
//! # comment
//! piece A sfs(-1; 1/2, 1/3) boundaries 1
//! piece B sfs(0) boundaries 1
//! glue A.1 B.1 [0,1;1,0]
//! ```
//!
//! Boundary indices are 1-based. The matrix `[a,b;c,d]` sends the first
//! side's `d` to `a·d' + c·h'` and `h` to `b·d' + d·h'`. Printing a tree with
//! `Display` yields text this parser accepts.

use std::collections::HashMap;

use thiserror::Error;

use crate::seifert::{Fiber, SeifertPiece};
use crate::slopes::GluingMap;
use crate::tree::{validate_tree, BoundaryRef, Edge, GmTree, TreeError};

#[derive(Debug, Error, PartialEq)]
pub enum DslError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: unknown piece `{name}`")]
    Reference { line: usize, column: usize, name: String },
    #[error("line {line}, column {column}: piece `{piece}` has no boundary {index}")]
    Boundary { line: usize, column: usize, piece: String, index: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _text: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Cursor { chars: text.chars().map(|c| if c == '−' { '-' } else { c }).collect(), pos: 0, line, _text: text }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        DslError::Syntax { line: self.line, column: self.column(), message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn expect(&mut self, s: &str) -> Result<(), DslError> {
        self.skip_ws();
        let want: Vec<char> = s.chars().collect();
        if self.chars[self.pos..].starts_with(&want) {
            self.pos += want.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    fn word(&mut self) -> Result<(usize, String), DslError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|&c| c.is_alphanumeric() || "_~.".contains(c)) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a name"));
        }
        Ok((start + 1, self.chars[start..self.pos].iter().collect()))
    }

    fn int(&mut self) -> Result<i64, DslError> {
        self.skip_ws();
        let start = self.pos;
        if self.chars.get(self.pos) == Some(&'-') {
            self.pos += 1;
        }
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| {
            self.pos = start;
            self.error("expected an integer")
        })
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }
}

struct GlueDecl {
    line: usize,
    refs: [(usize, String, usize); 2],
    map: GluingMap,
}

fn parse_piece(cur: &mut Cursor) -> Result<SeifertPiece, DslError> {
    let (_, name) = cur.word()?;
    if name.contains('.') {
        return Err(DslError::Syntax { line: cur.line, column: cur.column(), message: format!("piece name `{name}` contains `.`") });
    }
    cur.expect("sfs(")?;
    let e0 = cur.int()?;
    let mut fibers = Vec::new();
    if cur.peek() == Some(';') {
        cur.expect(";")?;
        loop {
            let beta = cur.int()?;
            cur.expect("/")?;
            let alpha = cur.int()?;
            if alpha < 1 {
                return Err(cur.error("fiber denominator must be positive"));
            }
            fibers.push(Fiber::new(beta, alpha));
            if cur.peek() == Some(',') {
                cur.expect(",")?;
            } else {
                break;
            }
        }
    }
    cur.expect(")")?;
    let (col, kw) = cur.word()?;
    if kw != "boundaries" {
        return Err(DslError::Syntax { line: cur.line, column: col, message: "expected `boundaries`".into() });
    }
    let n = cur.int()?;
    if n < 0 {
        return Err(cur.error("boundary count must be non-negative"));
    }
    Ok(SeifertPiece::new(name, e0, fibers, n as usize))
}

fn parse_ref(cur: &mut Cursor) -> Result<(usize, String, usize), DslError> {
    let (col, token) = cur.word()?;
    let bad = || DslError::Syntax { line: cur.line, column: col, message: format!("expected NAME.INDEX, found `{token}`") };
    let (name, idx) = token.rsplit_once('.').ok_or_else(bad)?;
    let idx: usize = idx.parse().map_err(|_| bad())?;
    Ok((col, name.to_string(), idx))
}

fn parse_glue(cur: &mut Cursor) -> Result<GlueDecl, DslError> {
    let first = parse_ref(cur)?;
    let second = parse_ref(cur)?;
    cur.expect("[")?;
    let a = cur.int()?;
    cur.expect(",")?;
    let b = cur.int()?;
    cur.expect(";")?;
    let c = cur.int()?;
    cur.expect(",")?;
    let d = cur.int()?;
    cur.expect("]")?;
    Ok(GlueDecl { line: cur.line, refs: [first, second], map: GluingMap::new(a, b, c, d) })
}

/// Parses a manifold description into a validated tree. Edges are named
/// `e1`, `e2`, ... in order of appearance.
pub fn parse_manifold(text: &str) -> Result<GmTree, DslError> {
    let mut pieces = Vec::new();
    let mut glues = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut cur = Cursor::new(body, i + 1);
        if cur.at_end() {
            continue;
        }
        let (col, kw) = cur.word()?;
        match kw.as_str() {
            "piece" => pieces.push(parse_piece(&mut cur)?),
            "glue" => glues.push(parse_glue(&mut cur)?),
            _ => {
                return Err(DslError::Syntax { line: i + 1, column: col, message: format!("unknown declaration `{kw}`") })
            }
        }
        if !cur.at_end() {
            return Err(cur.error("unexpected trailing input"));
        }
    }
    let index: HashMap<&str, usize> = pieces.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();
    let mut edges = Vec::new();
    for (k, g) in glues.iter().enumerate() {
        let mut ends = [BoundaryRef::new(0, 0); 2];
        for (slot, (col, name, idx)) in g.refs.iter().enumerate() {
            let &p = index
                .get(name.as_str())
                .ok_or_else(|| DslError::Reference { line: g.line, column: *col, name: name.clone() })?;
            if *idx < 1 || *idx > pieces[p].boundaries {
                return Err(DslError::Boundary { line: g.line, column: *col, piece: name.clone(), index: *idx });
            }
            ends[slot] = BoundaryRef::new(p, idx - 1);
        }
        edges.push(Edge::new(format!("e{}", k + 1), ends[0], ends[1], g.map));
    }
    Ok(validate_tree(pieces, edges)?)
}
