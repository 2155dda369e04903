//! Materialized AST nodes and their textual notation.
//!
//! The notation is `#tag[child child ...]` for inner nodes and
//! `#tag['text']` for leaves. Leaf text escapes `'` and `\` with a
//! backslash and every byte outside printable ASCII as `\xHH`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_TREE_TAG: &str = "tree";
pub const DEFAULT_TOKEN_TAG: &str = "token";

/// An immutable AST node. Cloning is cheap; clones share the same record.
#[derive(Clone)]
pub struct Node(Arc<NodeData>);

struct NodeData {
    tag: Arc<str>,
    start: usize,
    end: usize,
    source: Arc<[u8]>,
    children: Vec<Node>,
}

impl Drop for NodeData {
    // Deep left-folded chains would overflow the stack with recursive drops.
    fn drop(&mut self) {
        let mut pending = std::mem::take(&mut self.children);
        while let Some(node) = pending.pop() {
            if let Ok(mut data) = Arc::try_unwrap(node.0) {
                pending.append(&mut data.children);
            }
        }
    }
}

impl Node {
    /// Builds a node over `source[start..end]`.
    ///
    /// # Panics
    /// If the span is reversed or exceeds the source.
    pub fn new(
        tag: Arc<str>,
        start: usize,
        end: usize,
        source: Arc<[u8]>,
        children: Vec<Node>,
    ) -> Node {
        assert!(start <= end && end <= source.len(), "span {start}..{end} out of bounds");
        debug_assert!(!tag.is_empty());
        Node(Arc::new(NodeData {
            tag,
            start,
            end,
            source,
            children,
        }))
    }

    pub fn tag(&self) -> &str {
        &self.0.tag
    }

    pub fn start(&self) -> usize {
        self.0.start
    }

    pub fn end(&self) -> usize {
        self.0.end
    }

    pub fn span(&self) -> (usize, usize) {
        (self.0.start, self.0.end)
    }

    pub fn children(&self) -> &[Node] {
        &self.0.children
    }

    pub fn is_leaf(&self) -> bool {
        self.0.children.is_empty()
    }

    pub fn source(&self) -> &Arc<[u8]> {
        &self.0.source
    }

    /// The matched bytes, `source[start..end]`.
    pub fn text(&self) -> &[u8] {
        &self.0.source[self.0.start..self.0.end]
    }

    /// True when both handles refer to the same record.
    pub fn ptr_eq(&self, other: &Node) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Number of distinct node records reachable from this node.
    pub fn distinct_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            if seen.insert(Arc::as_ptr(&n.0)) {
                stack.extend(n.children());
            }
        }
        seen.len()
    }

    /// Textual notation; see [`serialize`].
    pub fn serialize(&self, leaf_text: bool) -> String {
        serialize(self, leaf_text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(JsonNode::from(self)).expect("node serializes")
    }
}

impl PartialEq for Node {
    /// Structural equality: tags, leaf text and children in order. Spans and
    /// inner-node text are not compared.
    fn eq(&self, other: &Self) -> bool {
        equals(self, other)
    }
}

impl Eq for Node {}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self, true))
    }
}

impl fmt::Debug for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @{}..{}", serialize(self, true), self.start(), self.end())
    }
}

pub fn equals(a: &Node, b: &Node) -> bool {
    let mut stack = vec![(a, b)];
    while let Some((x, y)) = stack.pop() {
        if x.ptr_eq(y) {
            continue;
        }
        if x.tag() != y.tag() || x.children().len() != y.children().len() {
            return false;
        }
        if x.is_leaf() && x.text() != y.text() {
            return false;
        }
        stack.extend(x.children().iter().zip(y.children()));
    }
    true
}

fn escape_leaf(out: &mut String, text: &[u8]) {
    for &b in text {
        match b {
            b'\'' => out.push_str("\\'"),
            b'\\' => out.push_str("\\\\"),
            0x20..=0x7e => out.push(b as char),
            _ => out.push_str(&format!("\\x{b:02X}")),
        }
    }
}

/// Renders `n` in the textual notation. `leaf_text` off replaces every leaf
/// text with the empty string, leaving only the tree shape.
pub fn serialize(n: &Node, leaf_text: bool) -> String {
    enum Step<'a> {
        Open(&'a Node),
        Close,
        Space,
    }
    let mut out = String::new();
    let mut stack = vec![Step::Open(n)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Open(node) => {
                out.push('#');
                out.push_str(node.tag());
                out.push('[');
                if node.is_leaf() {
                    out.push('\'');
                    if leaf_text {
                        escape_leaf(&mut out, node.text());
                    }
                    out.push_str("']");
                } else {
                    stack.push(Step::Close);
                    for (i, c) in node.children().iter().enumerate().rev() {
                        stack.push(Step::Open(c));
                        if i > 0 {
                            stack.push(Step::Space);
                        }
                    }
                }
            }
            Step::Close => out.push(']'),
            Step::Space => out.push(' '),
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("notation syntax error at offset {offset}: {message}")]
pub struct NotationError {
    pub offset: usize,
    pub message: String,
}

enum Shape {
    Leaf(String, Vec<u8>),
    Tree(String, Vec<Shape>),
}

/// Parses the textual notation back into a node tree. Spans are synthesized
/// over a source made of the leaf texts concatenated in order.
pub fn parse_notation(text: &str) -> Result<Node, NotationError> {
    let mut p = NotationReader {
        src: text.as_bytes(),
        pos: 0,
    };
    p.ws();
    let shape = p.node()?;
    p.ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input after the root node"));
    }
    let mut source = Vec::new();
    collect_text(&shape, &mut source);
    let source: Arc<[u8]> = source.into();
    let mut cursor = 0;
    Ok(build_shape(shape, &source, &mut cursor))
}

fn collect_text(s: &Shape, out: &mut Vec<u8>) {
    match s {
        Shape::Leaf(_, t) => out.extend_from_slice(t),
        Shape::Tree(_, cs) => cs.iter().for_each(|c| collect_text(c, out)),
    }
}

fn build_shape(s: Shape, source: &Arc<[u8]>, cursor: &mut usize) -> Node {
    match s {
        Shape::Leaf(tag, text) => {
            let start = *cursor;
            *cursor += text.len();
            Node::new(tag.into(), start, *cursor, source.clone(), Vec::new())
        }
        Shape::Tree(tag, cs) => {
            let start = *cursor;
            let children: Vec<Node> = cs
                .into_iter()
                .map(|c| build_shape(c, source, cursor))
                .collect();
            Node::new(tag.into(), start, *cursor, source.clone(), children)
        }
    }
}

struct NotationReader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl NotationReader<'_> {
    fn err(&self, message: &str) -> NotationError {
        NotationError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), NotationError> {
        if self.src.get(self.pos) == Some(&b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", b as char)))
        }
    }

    fn node(&mut self) -> Result<Shape, NotationError> {
        self.expect(b'#')?;
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a tag name"));
        }
        let tag = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        self.expect(b'[')?;
        self.ws();
        if self.src.get(self.pos) == Some(&b'\'') {
            let text = self.leaf_text()?;
            self.ws();
            self.expect(b']')?;
            return Ok(Shape::Leaf(tag, text));
        }
        let mut children = Vec::new();
        loop {
            self.ws();
            match self.src.get(self.pos) {
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                Some(b'#') => children.push(self.node()?),
                _ => return Err(self.err("expected a child node, leaf text or `]`")),
            }
        }
        if children.is_empty() {
            return Err(NotationError {
                offset: start - 1,
                message: "node has neither children nor text".into(),
            });
        }
        Ok(Shape::Tree(tag, children))
    }

    fn leaf_text(&mut self) -> Result<Vec<u8>, NotationError> {
        self.expect(b'\'')?;
        let mut out = Vec::new();
        loop {
            match self.src.get(self.pos) {
                None => return Err(self.err("unterminated leaf text")),
                Some(b'\'') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'\\') => {
                    let esc = self.pos;
                    match self.src.get(self.pos + 1) {
                        Some(b'\'') => out.push(b'\''),
                        Some(b'\\') => out.push(b'\\'),
                        Some(b'x') => {
                            let hex = self
                                .src
                                .get(self.pos + 2..self.pos + 4)
                                .and_then(|h| std::str::from_utf8(h).ok())
                                .and_then(|h| u8::from_str_radix(h, 16).ok());
                            match hex {
                                Some(b) => {
                                    out.push(b);
                                    self.pos += 2;
                                }
                                None => {
                                    self.pos = esc;
                                    return Err(self.err("bad `\\x` escape"));
                                }
                            }
                        }
                        _ => return Err(self.err("bad escape in leaf text")),
                    }
                    self.pos += 2;
                }
                Some(&b) => {
                    out.push(b);
                    self.pos += 1;
                }
            }
        }
    }
}

/// JSON form: `{tag, start, end, text}` for leaves, `{tag, start, end,
/// children}` for inner nodes.
#[derive(Serialize)]
pub struct JsonNode {
    pub tag: String,
    pub start: usize,
    pub end: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<JsonNode>>,
}

impl From<&Node> for JsonNode {
    fn from(n: &Node) -> Self {
        JsonNode {
            tag: n.tag().to_string(),
            start: n.start(),
            end: n.end(),
            text: n
                .is_leaf()
                .then(|| String::from_utf8_lossy(n.text()).into_owned()),
            children: (!n.is_leaf()).then(|| n.children().iter().map(JsonNode::from).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(s: &str) -> Arc<[u8]> {
        Arc::from(s.as_bytes())
    }

    #[test]
    fn leaf_notation() {
        let n = Node::new("Int".into(), 0, 2, src("12"), vec![]);
        assert_eq!(n.serialize(true), "#Int['12']");
    }

    #[test]
    fn tree_notation() {
        let s = src("1+2");
        let one = Node::new("Int".into(), 0, 1, s.clone(), vec![]);
        let two = Node::new("Int".into(), 2, 3, s.clone(), vec![]);
        let add = Node::new("Add".into(), 0, 3, s, vec![one, two]);
        assert_eq!(add.to_string(), "#Add[#Int['1'] #Int['2']]");
        assert_eq!(add.serialize(false), "#Add[#Int[''] #Int['']]");
    }

    #[test]
    fn empty_leaf() {
        let n = Node::new(DEFAULT_TOKEN_TAG.into(), 1, 1, src("ab"), vec![]);
        assert_eq!(n.to_string(), "#token['']");
    }

    #[test]
    fn leaf_escapes() {
        let n = Node::new("t".into(), 0, 5, src("a'\\\n\u{7f}"), vec![]);
        assert_eq!(n.to_string(), r"#t['a\'\\\x0A\x7F']");
        assert_eq!(parse_notation(&n.to_string()).unwrap(), n);
    }

    #[test]
    fn parse_leaf() {
        let n = parse_notation("#Int['12']").unwrap();
        assert_eq!(n.tag(), "Int");
        assert_eq!(n.text(), b"12");
        assert!(n.is_leaf());
    }

    #[test]
    fn parse_nested_pairs() {
        let n = parse_notation("#Pair[#Pair[#Term['A'] #Term['B']] #Term['C']]").unwrap();
        assert_eq!(n.children().len(), 2);
        assert_eq!(n.children()[0].tag(), "Pair");
        assert_eq!(n.children()[0].children()[1].text(), b"B");
        assert_eq!(n.span(), (0, 3));
        assert_eq!(n.children()[1].span(), (2, 3));
    }

    #[test]
    fn parse_rejects_bare_node() {
        let e = parse_notation("#t[]").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(parse_notation("#t['a'").is_err());
        assert!(parse_notation("t['a']").is_err());
        assert!(parse_notation("#t['a'] #u['b']").is_err());
        assert!(parse_notation("#t['\\q']").is_err());
    }

    #[test]
    fn equality_is_structural() {
        let a = parse_notation("#Add[#Int['1'] #Int['2']]").unwrap();
        let b = parse_notation("#Add[#Int['2'] #Int['1']]").unwrap();
        assert_eq!(a, a.clone());
        assert_ne!(a, b);
        let s = src("xx1+2");
        let shifted = Node::new(
            "Add".into(),
            2,
            5,
            s.clone(),
            vec![
                Node::new("Int".into(), 2, 3, s.clone(), vec![]),
                Node::new("Int".into(), 4, 5, s, vec![]),
            ],
        );
        assert_eq!(a, shifted);
    }

    #[test]
    fn json_shape() {
        let a = parse_notation("#Add[#Int['1'] #Int['2']]").unwrap();
        let json = serde_json::to_string(&JsonNode::from(&a)).unwrap();
        assert_eq!(
            json,
            r#"{"tag":"Add","start":0,"end":2,"children":[{"tag":"Int","start":0,"end":1,"text":"1"},{"tag":"Int","start":1,"end":2,"text":"2"}]}"#
        );
    }

    #[test]
    fn deep_chain_drops_and_serializes() {
        let s = src("x");
        let mut n = Node::new("t".into(), 0, 1, s.clone(), vec![]);
        for _ in 0..200_000 {
            n = Node::new("f".into(), 0, 1, s.clone(), vec![n]);
        }
        assert!(n.serialize(true).ends_with("]]]"));
        assert_eq!(n.distinct_count(), 200_001);
        drop(n);
    }
}
