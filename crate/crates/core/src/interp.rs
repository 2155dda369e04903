//! Backtracking evaluation of core expressions.
//!
//! A [`Parser`] compiles a validated grammar once; every call to
//! [`Parser::parse_with`] runs a fresh [`ParseSession`] with its own machine,
//! memo table and statistics.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{Node, DEFAULT_TOKEN_TAG};
use crate::grammar::{
    assign_memo_points, desugar, parse_grammar_source, validate, Diagnostic, Expression, Grammar,
    MemoId, MemoPlan,
};
use crate::machine::{FoldSpan, Machine, MachineError, TxMark, DEFAULT_FOLD_SPAN};
use crate::packrat::{MemoEntry, MemoTable, Outcome, DEFAULT_WINDOW};

#[derive(Clone, Debug)]
pub struct ParseOptions {
    /// Use the packrat memo table.
    pub memo: bool,
    /// Sliding-window size of the memo table, in positions.
    pub window: usize,
    /// Emit AST entries. Off means plain recognition.
    pub build_ast: bool,
    /// Start production; the grammar's own start when `None`.
    pub start: Option<String>,
    pub fold_span: FoldSpan,
    /// Abort after this many evaluation steps. Unmemoized PEG parsing is
    /// exponential in the worst case; this bounds it.
    pub step_limit: Option<u64>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            memo: true,
            window: DEFAULT_WINDOW,
            build_ast: true,
            start: None,
            fold_span: DEFAULT_FOLD_SPAN,
            step_limit: None,
        }
    }
}

impl ParseOptions {
    pub fn recognize() -> Self {
        ParseOptions {
            build_ast: false,
            ..Self::default()
        }
    }

    pub fn without_memo() -> Self {
        ParseOptions {
            memo: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub consumed: usize,
    pub input_length: usize,
    /// Sum over backtracking events of the failure position minus the
    /// restored position.
    pub backtrack_total: u64,
    pub memo_lookups: u64,
    pub memo_hits: u64,
    /// Node records materialized, including speculative ones later dropped.
    pub nodes_created: usize,
    /// Distinct nodes in the final tree.
    pub nodes_in_result: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl Stats {
    pub fn backtrack_ratio(&self) -> f64 {
        ratio(self.backtrack_total as f64, self.input_length as f64)
    }

    pub fn memo_hit_ratio(&self) -> f64 {
        ratio(self.memo_hits as f64, self.memo_lookups as f64)
    }

    pub fn nodes_unused(&self) -> usize {
        self.nodes_created.saturating_sub(self.nodes_in_result)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "consumed": self.consumed,
            "input_length": self.input_length,
            "backtrack_total": self.backtrack_total,
            "backtrack_ratio": self.backtrack_ratio(),
            "memo_lookups": self.memo_lookups,
            "memo_hits": self.memo_hits,
            "memo_hit_ratio": self.memo_hit_ratio(),
            "nodes_created": self.nodes_created,
            "nodes_used": self.nodes_in_result,
            "nodes_unused": self.nodes_unused(),
        })
    }
}

/// One `key: value` line per statistic.
impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "consumed: {}", self.consumed)?;
        writeln!(f, "input_length: {}", self.input_length)?;
        writeln!(f, "backtrack_total: {}", self.backtrack_total)?;
        writeln!(f, "backtrack_ratio: {}", self.backtrack_ratio())?;
        writeln!(f, "memo_lookups: {}", self.memo_lookups)?;
        writeln!(f, "memo_hits: {}", self.memo_hits)?;
        writeln!(f, "memo_hit_ratio: {}", self.memo_hit_ratio())?;
        writeln!(f, "nodes_created: {}", self.nodes_created)?;
        writeln!(f, "nodes_used: {}", self.nodes_in_result)?;
        writeln!(f, "nodes_unused: {}", self.nodes_unused())
    }
}

#[derive(Clone, Debug)]
pub struct ParseResult {
    pub root: Node,
    pub consumed: usize,
    pub stats: Stats,
    /// Mutations refused because they targeted a materialized node, plus
    /// live log entries still aimed at one. Always zero unless the memo
    /// analysis is wrong.
    pub immutability_violations: usize,
}

impl ParseResult {
    pub fn is_complete(&self) -> bool {
        self.consumed == self.stats.input_length
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no match; farthest failure at offset {farthest}")]
    NoMatch { farthest: usize },
    #[error("unknown start production `{0}`")]
    UnknownStart(String),
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("internal machine error: {0}")]
    Machine(#[from] MachineError),
}

#[derive(Debug, Error, Clone)]
#[error("{}", summarize(.0))]
pub struct GrammarError(pub Vec<Diagnostic>);

fn summarize(diags: &[Diagnostic]) -> String {
    let errors: Vec<&Diagnostic> = diags.iter().filter(|d| d.is_error()).collect();
    match errors.as_slice() {
        [] => "invalid grammar".to_string(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more errors)", rest.len()),
    }
}

enum Op {
    Empty,
    Bytes(Box<[u8]>),
    Class(Box<[bool; 256]>),
    Any,
    Call(usize),
    Seq(Vec<Op>),
    Choice(Vec<Op>),
    Star(Box<Op>),
    Not(Box<Op>),
    New(Box<Op>),
    Fold(Box<Op>),
    Link {
        body: Box<Op>,
        index: Option<usize>,
    },
    /// A link over a nonterminal whose result is memoized.
    MemoLink {
        rule: usize,
        index: Option<usize>,
        memo: MemoId,
    },
    Tag(Arc<str>),
}

struct Rule {
    body: Op,
    memo: Option<MemoId>,
}

/// A compiled grammar, reusable across inputs and threads.
pub struct Parser {
    grammar: Grammar,
    plan: MemoPlan,
    rules: Vec<Rule>,
    warnings: Vec<Diagnostic>,
}

impl Parser {
    /// Validates and compiles `grammar`. Warnings are kept; errors reject it.
    pub fn new(grammar: &Grammar) -> Result<Parser, GrammarError> {
        let diags = validate(grammar);
        if diags.iter().any(Diagnostic::is_error) {
            return Err(GrammarError(diags));
        }
        let plan = assign_memo_points(grammar);
        let rules = grammar
            .productions()
            .map(|p| Rule {
                body: compile(&desugar(&p.expr), grammar, &plan),
                memo: plan.nonterminal_point(&p.name),
            })
            .collect();
        Ok(Parser {
            grammar: grammar.clone(),
            plan,
            rules,
            warnings: diags,
        })
    }

    /// Parses grammar text and compiles it.
    pub fn from_source(text: &str) -> Result<Parser, GrammarError> {
        let g = parse_grammar_source(text).map_err(GrammarError)?;
        Parser::new(&g)
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn memo_plan(&self) -> &MemoPlan {
        &self.plan
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }

    pub fn parse(&self, input: &[u8]) -> Result<ParseResult, ParseError> {
        self.parse_with(input, &ParseOptions::default())
    }

    pub fn parse_with(&self, input: &[u8], opts: &ParseOptions) -> Result<ParseResult, ParseError> {
        self.session(input, opts).run(opts.start.as_deref())
    }

    pub fn session(&self, input: &[u8], opts: &ParseOptions) -> ParseSession<'_> {
        let source: Arc<[u8]> = Arc::from(input);
        ParseSession {
            parser: self,
            len: source.len(),
            machine: Machine::with_fold_span(source.clone(), opts.fold_span),
            input: source,
            memo: opts
                .memo
                .then(|| MemoTable::new(self.plan.len(), opts.window, input.len())),
            build: opts.build_ast,
            pos: 0,
            farthest: 0,
            backtrack: 0,
            steps: 0,
            step_limit: opts.step_limit.unwrap_or(u64::MAX),
        }
    }
}

fn compile(e: &Expression, g: &Grammar, plan: &MemoPlan) -> Op {
    let c = |x: &Expression| compile(x, g, plan);
    let rule = |name: &str| g.index_of(name).expect("validated grammar references a known production");
    match e {
        Expression::Empty => Op::Empty,
        Expression::Terminal(bytes) => Op::Bytes(bytes.clone().into_boxed_slice()),
        Expression::CharClass(ranges) => {
            let mut set = Box::new([false; 256]);
            for r in ranges {
                for b in r.lo..=r.hi {
                    set[b as usize] = true;
                }
            }
            Op::Class(set)
        }
        Expression::AnyChar => Op::Any,
        Expression::Nonterminal(name) => Op::Call(rule(name)),
        Expression::Sequence(items) => Op::Seq(items.iter().map(c).collect()),
        Expression::Choice(items) => Op::Choice(items.iter().map(c).collect()),
        Expression::ZeroOrMore(b) => Op::Star(Box::new(c(b))),
        Expression::Not(b) => Op::Not(Box::new(c(b))),
        Expression::New(b) => Op::New(Box::new(c(b))),
        Expression::LeftFold(b) => Op::Fold(Box::new(c(b))),
        Expression::Link { body, index } => match body.as_ref() {
            Expression::Nonterminal(name) if plan.link_point(name).is_some() => Op::MemoLink {
                rule: rule(name),
                index: *index,
                memo: plan.link_point(name).unwrap(),
            },
            _ => Op::Link {
                body: Box::new(c(body)),
                index: *index,
            },
        },
        Expression::Tag(t) => Op::Tag(Arc::from(t.as_str())),
        Expression::Option(_) | Expression::OneOrMore(_) | Expression::And(_) => {
            unreachable!("desugared before compilation")
        }
    }
}

enum Stop {
    StepLimit,
    Machine(MachineError),
}

impl From<MachineError> for Stop {
    fn from(e: MachineError) -> Self {
        Stop::Machine(e)
    }
}

type Eval = Result<bool, Stop>;

/// The state of one parse: input, machine, memo table and counters.
pub struct ParseSession<'p> {
    parser: &'p Parser,
    input: Arc<[u8]>,
    len: usize,
    machine: Machine,
    memo: Option<MemoTable>,
    build: bool,
    pos: usize,
    farthest: usize,
    backtrack: u64,
    steps: u64,
    step_limit: u64,
}

impl ParseSession<'_> {
    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    /// Evaluates `start` (or the grammar's start) from position 0 and commits
    /// the outstanding transaction.
    pub fn run(mut self, start: Option<&str>) -> Result<ParseResult, ParseError> {
        let start = start.unwrap_or(self.parser.grammar.start());
        let rule = self
            .parser
            .grammar
            .index_of(start)
            .ok_or_else(|| ParseError::UnknownStart(start.to_string()))?;
        let mark = self.machine.tx_save();
        let matched = match self.call(rule) {
            Ok(m) => m,
            Err(Stop::StepLimit) => return Err(ParseError::StepLimit(self.step_limit)),
            Err(Stop::Machine(e)) => return Err(e.into()),
        };
        if !matched {
            return Err(ParseError::NoMatch {
                farthest: self.farthest,
            });
        }
        let consumed = self.pos;
        let built = if self.build {
            self.machine.tx_commit(&mark)?
        } else {
            None
        };
        let mut created = self.machine.nodes_created();
        let root = built.unwrap_or_else(|| {
            created += 1;
            Node::new(DEFAULT_TOKEN_TAG.into(), 0, consumed, self.input.clone(), Vec::new())
        });
        let (memo_lookups, memo_hits) = self.memo.as_ref().map_or((0, 0), |t| (t.lookups(), t.hits()));
        let stats = Stats {
            consumed,
            input_length: self.len,
            backtrack_total: self.backtrack,
            memo_lookups,
            memo_hits,
            nodes_created: created,
            nodes_in_result: root.distinct_count(),
        };
        Ok(ParseResult {
            root,
            consumed,
            stats,
            immutability_violations: self.machine.mutation_violations() + self.machine.audit(),
        })
    }

    fn save(&self) -> Option<TxMark> {
        self.build.then(|| self.machine.tx_save())
    }

    /// Restores `p` and the machine after a failed or predicate evaluation.
    fn restore(&mut self, p: usize, mark: &Option<TxMark>) {
        self.backtrack += (self.pos - p) as u64;
        self.pos = p;
        if let Some(m) = mark {
            self.machine.tx_abort(m);
        }
    }

    fn fail_here(&mut self) -> Eval {
        self.farthest = self.farthest.max(self.pos);
        Ok(false)
    }

    fn call(&mut self, rule: usize) -> Eval {
        let parser = self.parser;
        let r = &parser.rules[rule];
        let (Some(m), true) = (r.memo, self.memo.is_some()) else {
            return self.eval(&r.body);
        };
        let p = self.pos;
        if let Some(entry) = self.memo.as_mut().unwrap().lookup(m, p) {
            self.farthest = self.farthest.max(entry.farthest);
            return Ok(match entry.outcome {
                Outcome::Success { consumed, .. } => {
                    self.pos = p + consumed;
                    true
                }
                Outcome::Failure => false,
            });
        }
        let outer = std::mem::take(&mut self.farthest);
        let ok = self.eval(&r.body)?;
        let inner = self.farthest;
        self.farthest = outer.max(inner);
        let outcome = if ok {
            Outcome::Success {
                consumed: self.pos - p,
                node: None,
            }
        } else {
            Outcome::Failure
        };
        self.memo.as_mut().unwrap().memoize(
            m,
            p,
            MemoEntry {
                outcome,
                farthest: inner,
            },
        );
        Ok(ok)
    }

    fn memo_link(&mut self, rule: usize, index: Option<usize>, m: MemoId) -> Eval {
        let Some(table) = self.memo.as_mut() else {
            return self.plain_link(&Op::Call(rule), index);
        };
        let p = self.pos;
        if let Some(entry) = table.lookup(m, p) {
            self.farthest = self.farthest.max(entry.farthest);
            let Outcome::Success { consumed, node } = entry.outcome.clone() else {
                return Ok(false);
            };
            self.pos = p + consumed;
            if self.build {
                self.machine.emit_link_start();
                if let Some(n) = node {
                    self.machine.load_left(n);
                }
                self.machine.emit_link_end(index);
            }
            return Ok(true);
        }

        if self.build {
            self.machine.emit_link_start();
        }
        let mark = self.save();
        let outer = std::mem::take(&mut self.farthest);
        let parser = self.parser;
        let ok = self.eval(&parser.rules[rule].body)?;
        let inner = self.farthest;
        self.farthest = outer.max(inner);

        let outcome = if ok {
            let node = match &mark {
                Some(mark) => {
                    let unchanged = self.machine.left_unchanged_since(mark);
                    let node = self.machine.tx_commit(mark)?;
                    if unchanged {
                        None
                    } else {
                        node
                    }
                }
                None => None,
            };
            Outcome::Success {
                consumed: self.pos - p,
                node,
            }
        } else {
            if let Some(mark) = &mark {
                self.machine.tx_abort(mark);
            }
            Outcome::Failure
        };
        self.memo.as_mut().unwrap().memoize(
            m,
            p,
            MemoEntry {
                outcome,
                farthest: inner,
            },
        );
        if ok && self.build {
            self.machine.emit_link_end(index);
        }
        Ok(ok)
    }

    fn plain_link(&mut self, body: &Op, index: Option<usize>) -> Eval {
        if !self.build {
            return self.eval(body);
        }
        self.machine.emit_link_start();
        if !self.eval(body)? {
            return Ok(false);
        }
        self.machine.emit_link_end(index);
        Ok(true)
    }

    fn eval(&mut self, op: &Op) -> Eval {
        self.steps += 1;
        if self.steps > self.step_limit {
            return Err(Stop::StepLimit);
        }
        match op {
            Op::Empty => Ok(true),
            Op::Bytes(bytes) => {
                if self.input[self.pos..].starts_with(bytes) {
                    self.pos += bytes.len();
                    Ok(true)
                } else {
                    self.fail_here()
                }
            }
            Op::Class(set) => match self.input.get(self.pos) {
                Some(&b) if set[b as usize] => {
                    self.pos += 1;
                    Ok(true)
                }
                _ => self.fail_here(),
            },
            Op::Any => {
                if self.pos < self.len {
                    self.pos += 1;
                    Ok(true)
                } else {
                    self.fail_here()
                }
            }
            Op::Call(rule) => self.call(*rule),
            Op::Seq(items) => {
                for item in items {
                    if !self.eval(item)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Op::Choice(alts) => {
                let p = self.pos;
                let mark = self.save();
                for alt in alts {
                    if self.eval(alt)? {
                        return Ok(true);
                    }
                    self.restore(p, &mark);
                }
                Ok(false)
            }
            Op::Star(body) => {
                loop {
                    let p = self.pos;
                    let mark = self.save();
                    if !self.eval(body)? {
                        self.restore(p, &mark);
                        break;
                    }
                    if self.pos == p {
                        if let Some(m) = &mark {
                            self.machine.tx_abort(m);
                        }
                        break;
                    }
                }
                Ok(true)
            }
            Op::Not(body) => {
                let p = self.pos;
                let mark = self.save();
                let matched = self.eval(body)?;
                self.restore(p, &mark);
                Ok(!matched)
            }
            Op::New(body) => {
                if !self.build {
                    return self.eval(body);
                }
                let v = self.machine.emit_new(self.pos);
                if !self.eval(body)? {
                    return Ok(false);
                }
                self.machine.emit_capture(v, self.pos);
                Ok(true)
            }
            Op::Fold(body) => {
                if !self.build {
                    return self.eval(body);
                }
                let v = self.machine.emit_fold(self.pos);
                if !self.eval(body)? {
                    return Ok(false);
                }
                self.machine.emit_capture(v, self.pos);
                Ok(true)
            }
            Op::Link { body, index } => self.plain_link(body, *index),
            Op::MemoLink { rule, index, memo } => self.memo_link(*rule, *index, *memo),
            Op::Tag(tag) => {
                if self.build {
                    self.machine.emit_tag(tag.clone());
                }
                Ok(true)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(grammar: &str, input: &str) -> String {
        let p = Parser::from_source(grammar).unwrap();
        p.parse(input.as_bytes()).unwrap().root.to_string()
    }

    fn parse_from(grammar: &str, start: &str, input: &str) -> String {
        let p = Parser::from_source(grammar).unwrap();
        let opts = ParseOptions {
            start: Some(start.to_string()),
            ..ParseOptions::default()
        };
        p.parse_with(input.as_bytes(), &opts).unwrap().root.to_string()
    }

    const TAGGING: &str = "Value = { [0-9]+ }\nNumber = { [0-9]+ } #Int\n";
    const ADDITIVE: &str = "\
        Additive = { @Number '+' @Number #Add }
        Additive2 = { @[1]Number '+' @[0]Number #Add }
        AdditiveM = { @Number ('+' @Number)+ #Add }
        AdditiveM2 = { @Number ('+' @[1]Number)+ #Add }
        Number = { [0-9]+ #Int }";

    #[test]
    fn tagging() {
        assert_eq!(parse_from(TAGGING, "Value", "12"), "#token['12']");
        assert_eq!(parse_from(TAGGING, "Number", "12"), "#Int['12']");
    }

    #[test]
    fn equivalent_tag_placements() {
        for g in [
            "Number = Value #Int\nValue = { [0-9]+ }",
            "Number = { #Int [0-9]+ }",
            "Number = { [0-9]+ #Int }",
        ] {
            assert_eq!(parse(g, "12"), "#Int['12']", "{g}");
        }
    }

    #[test]
    fn retagging_by_suffix() {
        let g = "Number = { [0-9]+ #Int ([Ll] #Long)? }";
        assert_eq!(parse(g, "12"), "#Int['12']");
        assert_eq!(parse(g, "12L"), "#Long['12L']");
    }

    #[test]
    fn links_and_indexers() {
        assert_eq!(parse_from(ADDITIVE, "Additive", "1+2"), "#Add[#Int['1'] #Int['2']]");
        assert_eq!(parse_from(ADDITIVE, "Additive2", "1+2"), "#Add[#Int['2'] #Int['1']]");
        assert_eq!(
            parse_from(ADDITIVE, "AdditiveM", "1+2+3+4"),
            "#Add[#Int['1'] #Int['2'] #Int['3'] #Int['4']]"
        );
        assert_eq!(parse_from(ADDITIVE, "AdditiveM2", "1+2+3+4"), "#Add[#Int['1'] #Int['4']]");
    }

    #[test]
    fn list_and_pair_shapes() {
        let list = "Expr = List / Term\nList = { @Term (',' @Term)+ #List }\nTerm = { [A-z] #Term }";
        assert_eq!(
            parse(list, "A,B,C,D"),
            "#List[#Term['A'] #Term['B'] #Term['C'] #Term['D']]"
        );
        let right = "Expr = Pair / Term\nPair = { @Term ',' @Expr #Pair }\nTerm = { [A-z] #Term }";
        assert_eq!(
            parse(right, "A,B,C,D"),
            "#Pair[#Term['A'] #Pair[#Term['B'] #Pair[#Term['C'] #Term['D']]]]"
        );
        let left = "Expr = Term {@ (',' @Term) #Pair }*\nTerm = { [A-z] #Term }";
        assert_eq!(
            parse(left, "A,B,C,D"),
            "#Pair[#Pair[#Pair[#Term['A'] #Term['B']] #Term['C']] #Term['D']]"
        );
    }

    const MATH: &str = "\
        Expr = Sum
        Sum = Product {@ ( '+' #add / '-' #sub ) @Product }*
        Product = Value {@ ( '*' #mul / '/' #div ) @Value }*
        Value = { [0-9]+ #Integer } / '(' Expr ')'";

    #[test]
    fn math_precedence() {
        assert_eq!(
            parse(MATH, "1+2*3"),
            "#add[#Integer['1'] #mul[#Integer['2'] #Integer['3']]]"
        );
        assert_eq!(
            parse(MATH, "1-2-3"),
            "#sub[#sub[#Integer['1'] #Integer['2']] #Integer['3']]"
        );
        assert_eq!(
            parse(MATH, "(1+2)*3"),
            "#mul[#add[#Integer['1'] #Integer['2']] #Integer['3']]"
        );
    }

    #[test]
    fn fold_span_covers_first_child() {
        let p = Parser::from_source("S = {'a'} {@ 'b'}").unwrap();
        let r = p.parse(b"ab").unwrap();
        assert_eq!(r.root.to_string(), "#tree[#token['a']]");
        assert_eq!(r.root.span(), (0, 2));
    }

    #[test]
    fn not_predicate_is_pure() {
        let p = Parser::from_source("S = !'a' .").unwrap();
        let r = p.parse(b"b").unwrap();
        assert_eq!(r.consumed, 1);
        assert!(p.parse(b"a").is_err());
    }

    #[test]
    fn partial_input_succeeds() {
        let p = Parser::from_source("S = { 'a' }").unwrap();
        let r = p.parse(b"ab").unwrap();
        assert_eq!(r.consumed, 1);
        assert!(!r.is_complete());
    }

    #[test]
    fn farthest_failure_is_reported() {
        let p = Parser::from_source("S = 'ab' 'c' / 'a' 'x'").unwrap();
        assert_eq!(p.parse(b"abd").unwrap_err(), ParseError::NoMatch { farthest: 2 });
    }

    #[test]
    fn backtrack_counts_consumption_of_failed_alternative() {
        let p = Parser::from_source("S = 'abc' 'x' / 'abc' 'y'").unwrap();
        let r = p.parse(b"abcy").unwrap();
        assert_eq!(r.stats.backtrack_total, 3);
    }

    #[test]
    fn and_predicate_counts_its_lookahead() {
        let p = Parser::from_source("S = &'abcde' .").unwrap();
        let r = p.parse(b"abcde").unwrap();
        assert_eq!(r.consumed, 1);
        assert_eq!(r.stats.backtrack_total, 5);
    }

    #[test]
    fn deterministic_grammar_has_no_backtracking() {
        let p = Parser::from_source("S = { (@Item ',')* #List }\nItem = { [a-z]+ #Item }").unwrap();
        let r = p.parse(b"ab,cd,").unwrap();
        assert_eq!(r.stats.backtrack_ratio(), 0.0);
        assert_eq!(r.stats.nodes_unused(), 0);
    }

    #[test]
    fn memo_hit_reuses_the_same_node() {
        let p = Parser::from_source("S = { @A 'x' } / { @A 'y' }\nA = { [0-9] #Num }").unwrap();
        let r = p.parse(b"1y").unwrap();
        assert_eq!(r.root.to_string(), "#tree[#Num['1']]");
        assert_eq!((r.stats.memo_lookups, r.stats.memo_hits), (2, 1));
        // The node committed in the failed first alternative is the one linked.
        assert_eq!(r.stats.nodes_created, 2);
        assert_eq!(r.stats.nodes_unused(), 0);
        assert_eq!(r.immutability_violations, 0);
    }

    #[test]
    fn memo_off_matches_memo_on() {
        let p = Parser::from_source(MATH).unwrap();
        for input in ["1+2*3", "(1+2)*(3-4)/5", "((7))"] {
            let on = p.parse(input.as_bytes()).unwrap();
            let off = p.parse_with(input.as_bytes(), &ParseOptions::without_memo()).unwrap();
            assert_eq!(on.root.to_string(), off.root.to_string());
            assert_eq!(off.stats.memo_lookups, 0);
        }
    }

    #[test]
    fn recognize_mode_builds_nothing() {
        let p = Parser::from_source(MATH).unwrap();
        let r = p.parse_with(b"1+2", &ParseOptions::recognize()).unwrap();
        assert_eq!(r.consumed, 3);
        assert_eq!(r.root.to_string(), "#token['1+2']");
    }

    #[test]
    fn no_constructor_yields_token_root() {
        assert_eq!(parse("S = 'a' 'b'", "ab"), "#token['ab']");
    }

    #[test]
    fn zero_width_loop_terminates() {
        let p = Parser::from_source("S = { ('' #T)* 'a' }").unwrap();
        let r = p.parse(b"a").unwrap();
        assert_eq!(r.root.to_string(), "#token['a']");
    }

    #[test]
    fn step_limit_stops_runaway_parses() {
        let p = Parser::from_source("S = 'a'* 'b'").unwrap();
        let opts = ParseOptions {
            step_limit: Some(10),
            ..ParseOptions::default()
        };
        assert_eq!(p.parse_with(&[b'a'; 100], &opts).unwrap_err(), ParseError::StepLimit(10));
    }

    #[test]
    fn unknown_start_is_reported() {
        let p = Parser::from_source("S = 'a'").unwrap();
        let opts = ParseOptions {
            start: Some("T".into()),
            ..ParseOptions::default()
        };
        assert_eq!(
            p.parse_with(b"a", &opts).unwrap_err(),
            ParseError::UnknownStart("T".into())
        );
    }

    #[test]
    fn invalid_grammar_is_rejected() {
        let err = Parser::from_source("A = A 'x'").err().unwrap();
        assert!(err.to_string().contains("left-recursion"), "{err}");
    }

    #[test]
    fn stats_block_format() {
        let s = Stats {
            consumed: 2,
            input_length: 4,
            backtrack_total: 1,
            memo_lookups: 0,
            memo_hits: 0,
            nodes_created: 3,
            nodes_in_result: 2,
        };
        assert_eq!(
            s.to_string(),
            "consumed: 2\ninput_length: 4\nbacktrack_total: 1\nbacktrack_ratio: 0.25\n\
             memo_lookups: 0\nmemo_hits: 0\nmemo_hit_ratio: 0\nnodes_created: 3\n\
             nodes_used: 2\nnodes_unused: 1\n"
        );
    }
}
