//! Grammars with AST operators: the expression tree, the grammar-file
//! syntax, desugaring into core form, and static analyses.

mod analysis;
mod desugar;
mod syntax;

use std::fmt;

use indexmap::IndexMap;

pub use analysis::{assign_memo_points, validate, Diagnostic, MemoId, MemoPlan, Severity};
pub use desugar::{desugar, expand_char_classes};
pub use syntax::parse_grammar_source;

/// An inclusive byte range inside a character class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ByteRange {
    pub lo: u8,
    pub hi: u8,
}

impl ByteRange {
    pub fn new(lo: u8, hi: u8) -> Self {
        debug_assert!(lo <= hi);
        ByteRange { lo, hi }
    }

    pub fn single(b: u8) -> Self {
        ByteRange { lo: b, hi: b }
    }

    pub fn contains(&self, b: u8) -> bool {
        self.lo <= b && b <= self.hi
    }
}

/// A parsing expression, including the AST operators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expression {
    Empty,
    /// A non-empty byte literal.
    Terminal(Vec<u8>),
    /// A non-empty set of inclusive byte ranges.
    CharClass(Vec<ByteRange>),
    AnyChar,
    Nonterminal(String),
    Sequence(Vec<Expression>),
    /// Prioritized choice.
    Choice(Vec<Expression>),
    Option(Box<Expression>),
    ZeroOrMore(Box<Expression>),
    OneOrMore(Box<Expression>),
    And(Box<Expression>),
    Not(Box<Expression>),
    /// The constructor `{ e }`.
    New(Box<Expression>),
    /// Left folding `{@ e }`.
    LeftFold(Box<Expression>),
    /// The connector `@e`, or `@[n]e` when an index is given.
    Link {
        body: Box<Expression>,
        index: Option<usize>,
    },
    /// Tagging `#t`.
    Tag(String),
}

impl Expression {
    /// Builds a literal; the empty literal collapses to [`Expression::Empty`].
    pub fn terminal(bytes: impl Into<Vec<u8>>) -> Self {
        let bytes = bytes.into();
        if bytes.is_empty() {
            Expression::Empty
        } else {
            Expression::Terminal(bytes)
        }
    }

    pub fn nonterminal(name: impl Into<String>) -> Self {
        Expression::Nonterminal(name.into())
    }

    /// Builds a sequence, collapsing the zero- and one-element cases.
    pub fn seq(mut items: Vec<Expression>) -> Self {
        match items.len() {
            0 => Expression::Empty,
            1 => items.pop().unwrap(),
            _ => Expression::Sequence(items),
        }
    }

    /// Builds a prioritized choice, collapsing the one-element case.
    pub fn choice(mut alts: Vec<Expression>) -> Self {
        match alts.len() {
            0 => Expression::Empty,
            1 => alts.pop().unwrap(),
            _ => Expression::Choice(alts),
        }
    }

    pub fn link(body: Expression) -> Self {
        Expression::Link {
            body: Box::new(body),
            index: None,
        }
    }

    pub fn link_at(body: Expression, index: usize) -> Self {
        Expression::Link {
            body: Box::new(body),
            index: Some(index),
        }
    }

    pub fn new_node(body: Expression) -> Self {
        Expression::New(Box::new(body))
    }

    pub fn fold(body: Expression) -> Self {
        Expression::LeftFold(Box::new(body))
    }

    pub fn tag(name: impl Into<String>) -> Self {
        Expression::Tag(name.into())
    }

    /// Direct subexpressions, in evaluation order.
    pub fn children(&self) -> Vec<&Expression> {
        match self {
            Expression::Empty
            | Expression::Terminal(_)
            | Expression::CharClass(_)
            | Expression::AnyChar
            | Expression::Nonterminal(_)
            | Expression::Tag(_) => Vec::new(),
            Expression::Sequence(items) | Expression::Choice(items) => items.iter().collect(),
            Expression::Option(e)
            | Expression::ZeroOrMore(e)
            | Expression::OneOrMore(e)
            | Expression::And(e)
            | Expression::Not(e)
            | Expression::New(e)
            | Expression::LeftFold(e)
            | Expression::Link { body: e, .. } => vec![e],
        }
    }

    /// Calls `f` on this expression and every subexpression, pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expression)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// True for the constructor, left-folding, connector and tagging operators.
    pub fn is_ast_operator(&self) -> bool {
        matches!(
            self,
            Expression::New(_)
                | Expression::LeftFold(_)
                | Expression::Link { .. }
                | Expression::Tag(_)
        )
    }

    /// Removes every AST operator, keeping the recognized language intact.
    pub fn erase_ast_operators(&self) -> Expression {
        match self {
            Expression::Tag(_) => Expression::Empty,
            Expression::New(e) | Expression::LeftFold(e) | Expression::Link { body: e, .. } => {
                e.erase_ast_operators()
            }
            Expression::Sequence(items) => {
                Expression::Sequence(items.iter().map(|e| e.erase_ast_operators()).collect())
            }
            Expression::Choice(items) => {
                Expression::Choice(items.iter().map(|e| e.erase_ast_operators()).collect())
            }
            Expression::Option(e) => Expression::Option(Box::new(e.erase_ast_operators())),
            Expression::ZeroOrMore(e) => Expression::ZeroOrMore(Box::new(e.erase_ast_operators())),
            Expression::OneOrMore(e) => Expression::OneOrMore(Box::new(e.erase_ast_operators())),
            Expression::And(e) => Expression::And(Box::new(e.erase_ast_operators())),
            Expression::Not(e) => Expression::Not(Box::new(e.erase_ast_operators())),
            other => other.clone(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Choice(_) => 1,
            Expression::Sequence(_) => 2,
            Expression::And(_) | Expression::Not(_) | Expression::Link { .. } => 3,
            Expression::Option(_) | Expression::ZeroOrMore(_) | Expression::OneOrMore(_) => 4,
            _ => 5,
        }
    }
}

/// Line/column of a construct inside a grammar file (both 1-based).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SourcePos {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Clone, Debug)]
pub struct Production {
    pub name: String,
    pub expr: Expression,
    pub pos: SourcePos,
}

impl PartialEq for Production {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.expr == other.expr
    }
}

/// Named productions plus a start symbol.
///
/// Equality ignores source positions, so a grammar compares equal to the
/// result of re-parsing its printed form.
#[derive(Clone, Debug, PartialEq)]
pub struct Grammar {
    productions: IndexMap<String, Production>,
    start: String,
}

impl Grammar {
    /// Builds a grammar from `(name, expression)` pairs; the first pair is the
    /// start symbol. Later duplicates replace earlier ones.
    pub fn from_productions<I, S>(productions: I) -> Self
    where
        I: IntoIterator<Item = (S, Expression)>,
        S: Into<String>,
    {
        let mut map = IndexMap::new();
        for (name, expr) in productions {
            let name = name.into();
            map.insert(
                name.clone(),
                Production {
                    name,
                    expr,
                    pos: SourcePos::default(),
                },
            );
        }
        let start = map.keys().next().cloned().unwrap_or_default();
        Grammar {
            productions: map,
            start,
        }
    }

    pub(crate) fn from_parts(productions: IndexMap<String, Production>) -> Self {
        let start = productions.keys().next().cloned().unwrap_or_default();
        Grammar { productions, start }
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    /// Returns a copy with a different start symbol. The name is not checked
    /// here; [`validate`] reports an unknown start symbol.
    pub fn with_start(mut self, start: impl Into<String>) -> Self {
        self.start = start.into();
        self
    }

    pub fn get(&self, name: &str) -> Option<&Expression> {
        self.productions.get(name).map(|p| &p.expr)
    }

    pub fn production(&self, name: &str) -> Option<&Production> {
        self.productions.get(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.productions.get_index_of(name)
    }

    pub fn productions(&self) -> impl Iterator<Item = &Production> {
        self.productions.values()
    }

    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    /// Applies `f` to every production body.
    pub fn map_expressions(&self, mut f: impl FnMut(&Expression) -> Expression) -> Grammar {
        let productions = self
            .productions
            .iter()
            .map(|(k, p)| {
                (
                    k.clone(),
                    Production {
                        name: p.name.clone(),
                        expr: f(&p.expr),
                        pos: p.pos,
                    },
                )
            })
            .collect();
        Grammar {
            productions,
            start: self.start.clone(),
        }
    }

    /// Renders the grammar in the grammar-file syntax, one production per line.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for p in self.productions.values() {
            out.push_str(&p.name);
            out.push_str(" = ");
            out.push_str(&p.expr.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_source())
    }
}

fn write_escaped_byte(out: &mut String, b: u8, special: &[u8]) {
    match b {
        b'\n' => out.push_str("\\n"),
        b'\r' => out.push_str("\\r"),
        b'\t' => out.push_str("\\t"),
        b'\\' => out.push_str("\\\\"),
        _ if special.contains(&b) => {
            out.push('\\');
            out.push(b as char);
        }
        0x20..=0x7e => out.push(b as char),
        _ => out.push_str(&format!("\\x{b:02X}")),
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut fmt::Formatter<'_>, e: &Expression, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expression::Empty => f.write_str("''"),
            Expression::Terminal(bytes) => {
                let mut s = String::from("'");
                for &b in bytes {
                    write_escaped_byte(&mut s, b, b"'");
                }
                s.push('\'');
                f.write_str(&s)
            }
            Expression::CharClass(ranges) => {
                let mut s = String::from("[");
                for r in ranges {
                    write_escaped_byte(&mut s, r.lo, b"]-'");
                    if r.hi != r.lo {
                        s.push('-');
                        write_escaped_byte(&mut s, r.hi, b"]-'");
                    }
                }
                s.push(']');
                f.write_str(&s)
            }
            Expression::AnyChar => f.write_str("."),
            Expression::Nonterminal(name) => f.write_str(name),
            Expression::Sequence(items) => {
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    operand(f, e, 3)?;
                }
                Ok(())
            }
            Expression::Choice(alts) => {
                for (i, e) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" / ")?;
                    }
                    operand(f, e, 2)?;
                }
                Ok(())
            }
            Expression::Option(e) => {
                operand(f, e, 4)?;
                f.write_str("?")
            }
            Expression::ZeroOrMore(e) => {
                operand(f, e, 4)?;
                f.write_str("*")
            }
            Expression::OneOrMore(e) => {
                operand(f, e, 4)?;
                f.write_str("+")
            }
            Expression::And(e) => {
                f.write_str("&")?;
                operand(f, e, 3)
            }
            Expression::Not(e) => {
                f.write_str("!")?;
                operand(f, e, 3)
            }
            Expression::Link { body, index } => {
                match index {
                    Some(n) => write!(f, "@[{n}]")?,
                    None => f.write_str("@")?,
                }
                // `@[` would read back as an indexer.
                let text = body.to_string();
                if index.is_none() && text.starts_with('[') && body.precedence() >= 3 {
                    write!(f, "({text})")
                } else {
                    operand(f, body, 3)
                }
            }
            Expression::New(e) => write!(f, "{{ {e} }}"),
            Expression::LeftFold(e) => write!(f, "{{@ {e} }}"),
            Expression::Tag(t) => write!(f, "#{t}"),
        }
    }
}
