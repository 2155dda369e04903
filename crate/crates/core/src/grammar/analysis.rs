//! Static analyses: grammar validation and memo-point assignment.
//!
//! Both rely on one abstract interpretation of the left-node register. For a
//! region of the grammar entered with some left node `L`, it tracks whether
//! the register still holds `L` ("outer"), holds a node created inside the
//! region ("fresh"), or either. An AST operator that tags, links into, or
//! folds over `L` makes the region's result depend on nodes created outside
//! it, so the region cannot be memoized as a self-contained node.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexMap;

use super::{Expression, Grammar, SourcePos};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// A validation or syntax finding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Short kebab-case identifier such as `left-recursion`.
    pub code: &'static str,
    pub message: String,
    /// `None` when the finding concerns the whole file.
    pub production: Option<String>,
    pub pos: Option<SourcePos>,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.severity,
            self.code,
            self.production.as_deref().unwrap_or("<grammar>"),
            self.message
        )?;
        if let Some(pos) = self.pos {
            write!(f, " ({pos})")?;
        }
        Ok(())
    }
}

/// Dense identifier of a memoization point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemoId(pub u32);

impl MemoId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Memoization points of a grammar.
///
/// Link points are keyed by the nonterminal under `@`, so every `@A` and
/// `@[n]A` occurrence shares one point. Nonterminal points are productions
/// that reach no AST operator at all.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemoPlan {
    link_points: IndexMap<String, MemoId>,
    nonterminal_points: IndexMap<String, MemoId>,
    count: usize,
}

impl MemoPlan {
    pub fn link_point(&self, nonterminal: &str) -> Option<MemoId> {
        self.link_points.get(nonterminal).copied()
    }

    pub fn nonterminal_point(&self, nonterminal: &str) -> Option<MemoId> {
        self.nonterminal_points.get(nonterminal).copied()
    }

    pub fn link_points(&self) -> impl Iterator<Item = (&str, MemoId)> {
        self.link_points.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn nonterminal_points(&self) -> impl Iterator<Item = (&str, MemoId)> {
        self.nonterminal_points.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Total number of points; ids are `0..len()`.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

fn nullable(e: &Expression, known: &HashMap<&str, bool>) -> bool {
    match e {
        Expression::Empty | Expression::Tag(_) => true,
        Expression::Terminal(_) | Expression::CharClass(_) | Expression::AnyChar => false,
        Expression::Nonterminal(n) => known.get(n.as_str()).copied().unwrap_or(false),
        Expression::Sequence(items) => items.iter().all(|i| nullable(i, known)),
        Expression::Choice(items) => items.iter().any(|i| nullable(i, known)),
        Expression::Option(_) | Expression::ZeroOrMore(_) | Expression::And(_) | Expression::Not(_) => {
            true
        }
        Expression::OneOrMore(b)
        | Expression::New(b)
        | Expression::LeftFold(b)
        | Expression::Link { body: b, .. } => nullable(b, known),
    }
}

fn nullable_map(g: &Grammar) -> HashMap<&str, bool> {
    let mut known: HashMap<&str, bool> = g.productions().map(|p| (p.name.as_str(), false)).collect();
    loop {
        let mut changed = false;
        for p in g.productions() {
            if !known[p.name.as_str()] && nullable(&p.expr, &known) {
                known.insert(p.name.as_str(), true);
                changed = true;
            }
        }
        if !changed {
            return known;
        }
    }
}

/// Nonterminals that may be called before any input is consumed.
fn left_calls<'a>(e: &'a Expression, known: &HashMap<&str, bool>, out: &mut Vec<&'a str>) {
    match e {
        Expression::Nonterminal(n) => out.push(n),
        Expression::Sequence(items) => {
            for item in items {
                left_calls(item, known, out);
                if !nullable(item, known) {
                    break;
                }
            }
        }
        Expression::Choice(items) => items.iter().for_each(|i| left_calls(i, known, out)),
        Expression::Option(b)
        | Expression::ZeroOrMore(b)
        | Expression::OneOrMore(b)
        | Expression::And(b)
        | Expression::Not(b)
        | Expression::New(b)
        | Expression::LeftFold(b)
        | Expression::Link { body: b, .. } => left_calls(b, known, out),
        _ => {}
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LeftState {
    Bottom,
    Outer,
    Fresh,
    Maybe,
}

impl LeftState {
    fn join(self, other: LeftState) -> LeftState {
        use LeftState::*;
        match (self, other) {
            (Bottom, x) | (x, Bottom) => x,
            (a, b) if a == b => a,
            _ => Maybe,
        }
    }

    fn slot(self) -> usize {
        match self {
            LeftState::Outer => 0,
            LeftState::Fresh => 1,
            LeftState::Maybe => 2,
            LeftState::Bottom => unreachable!(),
        }
    }

    fn may_be_outer(self) -> bool {
        matches!(self, LeftState::Outer | LeftState::Maybe)
    }
}

const TAG_OUTER: u8 = 1;
const LINK_OUTER: u8 = 2;
const FOLD_OUTER: u8 = 4;

const STATES: [LeftState; 3] = [LeftState::Outer, LeftState::Fresh, LeftState::Maybe];

#[derive(Default)]
struct Trace {
    calls: Vec<(usize, LeftState)>,
    tag_outer: bool,
}

struct LeftFlow<'g> {
    grammar: &'g Grammar,
    summary: Vec<[(LeftState, u8); 3]>,
}

impl<'g> LeftFlow<'g> {
    fn new(grammar: &'g Grammar) -> Self {
        let mut flow = LeftFlow {
            grammar,
            summary: vec![[(LeftState::Bottom, 0); 3]; grammar.len()],
        };
        loop {
            let mut changed = false;
            for (i, p) in grammar.productions().enumerate() {
                for s in STATES {
                    let (out, flags) = flow.transfer(&p.expr, s, &mut None);
                    let old = flow.summary[i][s.slot()];
                    let new = (old.0.join(out), old.1 | flags);
                    if new != old {
                        flow.summary[i][s.slot()] = new;
                        changed = true;
                    }
                }
            }
            if !changed {
                return flow;
            }
        }
    }

    fn transfer(&self, e: &Expression, s: LeftState, trace: &mut Option<&mut Trace>) -> (LeftState, u8) {
        if s == LeftState::Bottom {
            return (s, 0);
        }
        match e {
            Expression::Empty
            | Expression::Terminal(_)
            | Expression::CharClass(_)
            | Expression::AnyChar
            | Expression::And(_)
            | Expression::Not(_) => (s, 0),
            Expression::Nonterminal(n) => match self.grammar.index_of(n) {
                Some(i) => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.calls.push((i, s));
                    }
                    self.summary[i][s.slot()]
                }
                None => (s, 0),
            },
            Expression::Sequence(items) => {
                let mut cur = s;
                let mut flags = 0;
                for item in items {
                    let (o, f) = self.transfer(item, cur, trace);
                    cur = o;
                    flags |= f;
                }
                (cur, flags)
            }
            Expression::Choice(items) => {
                let mut out = LeftState::Bottom;
                let mut flags = 0;
                for item in items {
                    let (o, f) = self.transfer(item, s, trace);
                    out = out.join(o);
                    flags |= f;
                }
                (out, flags)
            }
            Expression::Option(b) => {
                let (o, f) = self.transfer(b, s, trace);
                (s.join(o), f)
            }
            Expression::ZeroOrMore(b) | Expression::OneOrMore(b) => {
                let (first, mut flags) = self.transfer(b, s, trace);
                let mut cur = if matches!(e, Expression::ZeroOrMore(_)) {
                    s.join(first)
                } else {
                    first
                };
                loop {
                    let (o, f) = self.transfer(b, cur, trace);
                    flags |= f;
                    let next = cur.join(o);
                    if next == cur {
                        return (cur, flags);
                    }
                    cur = next;
                }
            }
            Expression::New(b) => {
                let (_, f) = self.transfer(b, LeftState::Fresh, trace);
                (LeftState::Fresh, f)
            }
            Expression::LeftFold(b) => {
                let mut flags = if s.may_be_outer() { FOLD_OUTER } else { 0 };
                let (_, f) = self.transfer(b, LeftState::Fresh, trace);
                flags |= f;
                (LeftState::Fresh, flags)
            }
            Expression::Link { body, .. } => {
                let (o, mut flags) = self.transfer(body, s, trace);
                if s.may_be_outer() && !matches!(o, LeftState::Outer | LeftState::Bottom) {
                    flags |= LINK_OUTER;
                }
                (s, flags)
            }
            Expression::Tag(_) => {
                if s.may_be_outer() {
                    if let Some(t) = trace.as_deref_mut() {
                        t.tag_outer = true;
                    }
                    (s, TAG_OUTER)
                } else {
                    (s, 0)
                }
            }
        }
    }

    /// True when evaluating production `i` never touches the left node it
    /// was entered with.
    fn self_contained(&self, i: usize) -> bool {
        self.summary[i][LeftState::Outer.slot()].1 == 0
    }

    /// Productions that may apply a tag while no node exists, when parsing
    /// starts from production `start`.
    fn tags_without_node(&self, start: usize) -> Vec<usize> {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut queue = VecDeque::from([(start, LeftState::Outer)]);
        let mut flagged = Vec::new();
        while let Some((i, s)) = queue.pop_front() {
            if !seen.insert((i, s.slot())) {
                continue;
            }
            let mut trace = Trace::default();
            let expr = &self.grammar.productions().nth(i).unwrap().expr;
            self.transfer(expr, s, &mut Some(&mut trace));
            if trace.tag_outer && !flagged.contains(&i) {
                flagged.push(i);
            }
            for (j, t) in trace.calls {
                if t.may_be_outer() {
                    queue.push_back((j, t));
                }
            }
        }
        flagged.sort_unstable();
        flagged
    }
}

fn ast_free_productions(g: &Grammar) -> Vec<bool> {
    let n = g.len();
    let mut direct = vec![false; n];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, p) in g.productions().enumerate() {
        p.expr.walk(&mut |e| {
            if e.is_ast_operator() {
                direct[i] = true;
            }
            if let Expression::Nonterminal(name) = e {
                if let Some(j) = g.index_of(name) {
                    edges[i].push(j);
                }
            }
        });
    }
    (0..n)
        .map(|i| {
            let mut seen = vec![false; n];
            let mut stack = vec![i];
            while let Some(j) = stack.pop() {
                if std::mem::replace(&mut seen[j], true) {
                    continue;
                }
                if direct[j] {
                    return false;
                }
                stack.extend(edges[j].iter().copied());
            }
            true
        })
        .collect()
}

/// Checks that a grammar is runnable. An empty list, or a list holding only
/// warnings, means the grammar can be handed to the interpreter.
pub fn validate(g: &Grammar) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |severity, code, p: &super::Production, message: String| Diagnostic {
        severity,
        code,
        message,
        production: Some(p.name.clone()),
        pos: Some(p.pos),
    };

    if g.is_empty() {
        out.push(Diagnostic {
            severity: Severity::Error,
            code: "empty-grammar",
            message: "the grammar defines no productions".into(),
            production: None,
            pos: None,
        });
        return out;
    }
    if g.index_of(g.start()).is_none() {
        out.push(Diagnostic {
            severity: Severity::Error,
            code: "undefined-start",
            message: format!("start symbol `{}` is not a production", g.start()),
            production: None,
            pos: None,
        });
    }

    for p in g.productions() {
        let mut missing: Vec<&str> = Vec::new();
        p.expr.walk(&mut |e| {
            if let Expression::Nonterminal(n) = e {
                if g.index_of(n).is_none() && !missing.contains(&n.as_str()) {
                    missing.push(n);
                }
            }
        });
        for n in missing {
            out.push(diag(
                Severity::Error,
                "undefined-nonterminal",
                p,
                format!("reference to undefined nonterminal `{n}`"),
            ));
        }
    }

    let known = nullable_map(g);
    let names: Vec<&str> = g.productions().map(|p| p.name.as_str()).collect();
    let edges: Vec<Vec<usize>> = g
        .productions()
        .map(|p| {
            let mut calls = Vec::new();
            left_calls(&p.expr, &known, &mut calls);
            calls.into_iter().filter_map(|n| g.index_of(n)).collect()
        })
        .collect();
    for (i, p) in g.productions().enumerate() {
        // breadth-first search for the shortest path back to `i`
        let mut parent: Vec<Option<usize>> = vec![None; names.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &j in &edges[i] {
            if parent[j].is_none() {
                parent[j] = Some(i);
                queue.push_back(j);
            }
        }
        let mut found = false;
        while let Some(j) = queue.pop_front() {
            if j == i {
                found = true;
                break;
            }
            for &k in &edges[j] {
                if parent[k].is_none() {
                    parent[k] = Some(j);
                    queue.push_back(k);
                }
            }
        }
        if found {
            let mut path = vec![names[i]];
            let mut cur = parent[i].unwrap();
            while cur != i {
                path.push(names[cur]);
                cur = parent[cur].unwrap();
            }
            path.push(names[i]);
            path.reverse();
            out.push(diag(
                Severity::Error,
                "left-recursion",
                p,
                format!(
                    "`{}` can call itself without consuming input ({})",
                    p.name,
                    path.join(" -> ")
                ),
            ));
        }
    }

    for p in g.productions() {
        let mut count = 0;
        p.expr.walk(&mut |e| {
            if let Expression::ZeroOrMore(b) | Expression::OneOrMore(b) = e {
                if nullable(b, &known) {
                    count += 1;
                }
            }
        });
        if count > 0 {
            out.push(diag(
                Severity::Warning,
                "nullable-repetition",
                p,
                format!("{count} repetition(s) can succeed without consuming input"),
            ));
        }
    }

    if let Some(start) = g.index_of(g.start()) {
        let flow = LeftFlow::new(g);
        let prods: Vec<_> = g.productions().collect();
        for i in flow.tags_without_node(start) {
            out.push(diag(
                Severity::Warning,
                "tag-outside-constructor",
                prods[i],
                "a tag may be applied before any node has been constructed".into(),
            ));
        }
    }

    out
}

/// Assigns memoization points. Expects a grammar without validation errors.
///
/// Ids are dense and follow production order: a production's own nonterminal
/// point (if any) comes first, then the link points first seen in its body.
/// A link `@A` gets a point only when `A` never tags, links into, or folds
/// over the left node it is entered with, so the memoized node is complete
/// and immutable at the moment it is stored.
pub fn assign_memo_points(g: &Grammar) -> MemoPlan {
    let ast_free = ast_free_productions(g);
    let flow = LeftFlow::new(g);
    let mut plan = MemoPlan::default();
    let mut next = 0u32;
    for (i, p) in g.productions().enumerate() {
        if ast_free[i] {
            plan.nonterminal_points.insert(p.name.clone(), MemoId(next));
            next += 1;
        }
        p.expr.walk(&mut |e| {
            if let Expression::Link { body, .. } = e {
                if let Expression::Nonterminal(name) = body.as_ref() {
                    if let Some(j) = g.index_of(name) {
                        if flow.self_contained(j) && !plan.link_points.contains_key(name) {
                            plan.link_points.insert(name.clone(), MemoId(next));
                            next += 1;
                        }
                    }
                }
            }
        });
    }
    plan.count = next as usize;
    plan
}
