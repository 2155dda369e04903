//! Grammar-file reader.
//!
//! ```text
//! Grammar    <- (Name '=' Choice)*
//! Choice     <- Sequence ('/' Sequence)*
//! Sequence   <- Prefix*                      (stops before `Name =`)
//! Prefix     <- ('&' / '!' / '@' / '@[' N ']') Prefix / Suffix
//! Suffix     <- Primary ('?' / '*' / '+')*
//! Primary    <- Literal / Class / '.' / '#' Name / '(' Choice ')'
//!             / '{@' Space Choice '}' / '{' Choice? '}' / Name
//! ```
//!
//! `{@` immediately followed by whitespace opens a left fold; `{@X` is a
//! constructor whose body starts with the connector `@X`.

use indexmap::IndexMap;

use super::{ByteRange, Diagnostic, Expression, Grammar, Production, Severity, SourcePos};

/// Parses grammar-file text into a [`Grammar`]. The first production is the
/// start symbol.
pub fn parse_grammar_source(text: &str) -> Result<Grammar, Vec<Diagnostic>> {
    let mut reader = Reader {
        src: text.as_bytes(),
        pos: 0,
    };
    let mut productions: IndexMap<String, Production> = IndexMap::new();
    let mut errors = Vec::new();

    reader.skip_ws();
    while !reader.at_end() {
        match reader.production() {
            Ok(p) => {
                if productions.contains_key(&p.name) {
                    errors.push(Diagnostic {
                        severity: Severity::Error,
                        code: "duplicate-production",
                        message: format!("production `{}` is defined more than once", p.name),
                        production: Some(p.name.clone()),
                        pos: Some(p.pos),
                    });
                } else {
                    productions.insert(p.name.clone(), p);
                }
            }
            Err(d) => {
                errors.push(d);
                return Err(errors);
            }
        }
        reader.skip_ws();
    }

    if productions.is_empty() && errors.is_empty() {
        errors.push(Diagnostic {
            severity: Severity::Error,
            code: "empty-grammar",
            message: "the grammar defines no productions".into(),
            production: None,
            pos: None,
        });
    }
    if errors.is_empty() {
        Ok(Grammar::from_parts(productions))
    } else {
        Err(errors)
    }
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

impl<'a> Reader<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.src.get(self.pos + k).copied()
    }

    fn source_pos(&self, offset: usize) -> SourcePos {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let line_start = before
            .iter()
            .rposition(|&b| b == b'\n')
            .map_or(0, |i| i + 1);
        let column = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
        SourcePos {
            offset,
            line,
            column,
        }
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code: "syntax",
            message: message.into(),
            production: None,
            pos: Some(self.source_pos(offset)),
        }
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(b' ' | b'\t' | b'\n' | b'\r') => self.pos += 1,
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => return,
            }
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        if !self.peek().is_some_and(is_ident_start) {
            return None;
        }
        while self.peek().is_some_and(is_ident_char) {
            self.pos += 1;
        }
        Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    /// True when the upcoming tokens are `Name =`, i.e. the next production.
    fn at_production_head(&self) -> bool {
        let mut probe = Reader {
            src: self.src,
            pos: self.pos,
        };
        if probe.ident().is_none() {
            return false;
        }
        probe.skip_ws();
        probe.peek() == Some(b'=')
    }

    fn production(&mut self) -> PResult<Production> {
        let start = self.pos;
        let name = self
            .ident()
            .ok_or_else(|| self.error(self.pos, "expected a production name"))?;
        let pos = self.source_pos(start);
        self.skip_ws();
        if self.peek() != Some(b'=') {
            return Err(self.error(self.pos, format!("expected `=` after `{name}`")));
        }
        self.pos += 1;
        self.skip_ws();
        let expr = self.choice()?;
        Ok(Production { name, expr, pos })
    }

    fn choice(&mut self) -> PResult<Expression> {
        let mut alts = vec![self.sequence()?];
        loop {
            self.skip_ws();
            if self.peek() == Some(b'/') && self.peek_at(1) != Some(b'/') {
                self.pos += 1;
                self.skip_ws();
                alts.push(self.sequence()?);
            } else {
                break;
            }
        }
        Ok(Expression::choice(alts))
    }

    fn at_sequence_end(&self) -> bool {
        match self.peek() {
            None | Some(b'/' | b')' | b'}') => true,
            _ => self.at_production_head(),
        }
    }

    fn sequence(&mut self) -> PResult<Expression> {
        let start = self.pos;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.at_sequence_end() {
                break;
            }
            items.push(self.prefix()?);
        }
        if items.is_empty() {
            return Err(self.error(start, "expected an expression"));
        }
        Ok(Expression::seq(items))
    }

    fn prefix(&mut self) -> PResult<Expression> {
        match self.peek() {
            Some(b'&') => {
                self.pos += 1;
                self.skip_ws();
                Ok(Expression::And(Box::new(self.prefix()?)))
            }
            Some(b'!') => {
                self.pos += 1;
                self.skip_ws();
                Ok(Expression::Not(Box::new(self.prefix()?)))
            }
            Some(b'@') => {
                self.pos += 1;
                let mut index = None;
                if self.peek() == Some(b'[') {
                    self.pos += 1;
                    self.skip_ws();
                    let digits_start = self.pos;
                    while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
                    let n: usize = digits
                        .parse()
                        .map_err(|_| self.error(digits_start, "expected a child index"))?;
                    self.skip_ws();
                    if self.peek() != Some(b']') {
                        return Err(self.error(self.pos, "expected `]` after the child index"));
                    }
                    self.pos += 1;
                    index = Some(n);
                }
                self.skip_ws();
                if self.at_sequence_end() {
                    return Err(self.error(self.pos, "expected an expression after `@`"));
                }
                let body = self.prefix()?;
                Ok(Expression::Link {
                    body: Box::new(body),
                    index,
                })
            }
            _ => self.suffix(),
        }
    }

    fn suffix(&mut self) -> PResult<Expression> {
        let mut e = self.primary()?;
        loop {
            let save = self.pos;
            self.skip_ws();
            match self.peek() {
                Some(b'?') => e = Expression::Option(Box::new(e)),
                Some(b'*') => e = Expression::ZeroOrMore(Box::new(e)),
                Some(b'+') => e = Expression::OneOrMore(Box::new(e)),
                _ => {
                    self.pos = save;
                    return Ok(e);
                }
            }
            self.pos += 1;
        }
    }

    fn primary(&mut self) -> PResult<Expression> {
        let start = self.pos;
        match self.peek() {
            Some(b'\'') => self.literal(),
            Some(b'[') => self.class(),
            Some(b'.') => {
                self.pos += 1;
                Ok(Expression::AnyChar)
            }
            Some(b'#') => {
                self.pos += 1;
                let name = self
                    .ident()
                    .ok_or_else(|| self.error(self.pos, "expected a tag name after `#`"))?;
                Ok(Expression::Tag(name))
            }
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.choice()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.error(start, "unbalanced `(`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'{') => {
                self.pos += 1;
                let fold = self.peek() == Some(b'@')
                    && matches!(self.peek_at(1), Some(b' ' | b'\t' | b'\n' | b'\r'));
                if fold {
                    self.pos += 1;
                }
                self.skip_ws();
                let body = if self.peek() == Some(b'}') {
                    Expression::Empty
                } else {
                    self.choice()?
                };
                self.skip_ws();
                if self.peek() != Some(b'}') {
                    return Err(self.error(start, "unbalanced `{`"));
                }
                self.pos += 1;
                Ok(if fold {
                    Expression::fold(body)
                } else {
                    Expression::new_node(body)
                })
            }
            Some(b) if is_ident_start(b) => {
                let name = self.ident().unwrap();
                Ok(Expression::Nonterminal(name))
            }
            Some(b) => Err(self.error(start, format!("unexpected character `{}`", b as char))),
            None => Err(self.error(start, "unexpected end of grammar")),
        }
    }

    fn escape(&mut self, extra: &[u8]) -> PResult<u8> {
        let at = self.pos;
        self.pos += 1;
        let b = self
            .peek()
            .ok_or_else(|| self.error(at, "unterminated escape"))?;
        self.pos += 1;
        Ok(match b {
            b'n' => b'\n',
            b'r' => b'\r',
            b't' => b'\t',
            b'\\' => b'\\',
            b'\'' => b'\'',
            b'x' => {
                let hex = self
                    .src
                    .get(self.pos..self.pos + 2)
                    .and_then(|h| std::str::from_utf8(h).ok())
                    .and_then(|h| u8::from_str_radix(h, 16).ok())
                    .ok_or_else(|| self.error(at, "bad `\\x` escape, expected two hex digits"))?;
                self.pos += 2;
                hex
            }
            _ if extra.contains(&b) => b,
            _ => return Err(self.error(at, format!("bad escape `\\{}`", b as char))),
        })
    }

    fn literal(&mut self) -> PResult<Expression> {
        let start = self.pos;
        self.pos += 1;
        let mut bytes = Vec::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => return Err(self.error(start, "unterminated literal")),
                Some(b'\'') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => bytes.push(self.escape(&[])?),
                Some(b) => {
                    bytes.push(b);
                    self.pos += 1;
                }
            }
        }
        Ok(Expression::terminal(bytes))
    }

    fn class_byte(&mut self, start: usize) -> PResult<u8> {
        match self.peek() {
            None | Some(b'\n') => Err(self.error(start, "unterminated character class")),
            Some(b'\\') => self.escape(b"]-["),
            Some(b) if b >= 0x80 => Err(self.error(
                self.pos,
                "non-ASCII character in a class; use `\\xHH` byte escapes",
            )),
            Some(b) => {
                self.pos += 1;
                Ok(b)
            }
        }
    }

    fn class(&mut self) -> PResult<Expression> {
        let start = self.pos;
        self.pos += 1;
        let mut ranges = Vec::new();
        loop {
            if self.peek() == Some(b']') {
                self.pos += 1;
                break;
            }
            let lo = self.class_byte(start)?;
            let hi = if self.peek() == Some(b'-') && self.peek_at(1) != Some(b']') {
                self.pos += 1;
                self.class_byte(start)?
            } else {
                lo
            };
            if lo > hi {
                return Err(self.error(start, "character class range is reversed"));
            }
            ranges.push(ByteRange::new(lo, hi));
        }
        if ranges.is_empty() {
            return Err(self.error(start, "empty character class"));
        }
        Ok(Expression::CharClass(ranges))
    }
}
