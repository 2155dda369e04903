//! Shared test support: a seeded random grammar generator and a reference
//! interpreter that snapshots its entire node state at every save point
//! instead of logging mutations.

#![allow(dead_code)]

use std::sync::Arc;

use pegtx::grammar::{validate, ByteRange, Expression, Grammar};
use pegtx::Node;
use rand::seq::SliceRandom;
use rand::Rng;

pub const ALPHABET: &[u8] = b"abc";
pub const MAX_PRODUCTIONS: usize = 8;
pub const MAX_INPUT: usize = 64;

/// Picks a production name, preferring ones defined later so the start
/// production reaches most of the grammar.
fn pick_name(rng: &mut impl Rng, names: &[String], me: usize) -> Expression {
    let i = if me + 1 < names.len() && rng.gen_bool(0.75) {
        rng.gen_range(me + 1..names.len())
    } else {
        rng.gen_range(0..names.len())
    };
    Expression::nonterminal(names[i].clone())
}

fn gen_terminal(rng: &mut impl Rng) -> Expression {
    let len = rng.gen_range(1..=2);
    Expression::Terminal((0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect())
}

fn gen_tag(rng: &mut impl Rng) -> Expression {
    Expression::tag(format!("T{}", rng.gen_range(0..3)))
}

fn gen_leaf(rng: &mut impl Rng, names: &[String], me: usize) -> Expression {
    match rng.gen_range(0..12) {
        0 => Expression::Empty,
        1..=3 => gen_terminal(rng),
        4 => {
            let lo = *ALPHABET.choose(rng).unwrap();
            let hi = *ALPHABET.choose(rng).unwrap();
            Expression::CharClass(vec![ByteRange::new(lo.min(hi), lo.max(hi))])
        }
        5 => Expression::AnyChar,
        6 => gen_tag(rng),
        _ => pick_name(rng, names, me),
    }
}

fn gen_link(rng: &mut impl Rng, names: &[String], me: usize, depth: u32) -> Expression {
    // Links over plain nonterminals exercise the memo path.
    let body = if depth == 0 || rng.gen_bool(0.7) {
        pick_name(rng, names, me)
    } else {
        gen_expr(rng, names, me, depth - 1)
    };
    let index = rng.gen_bool(0.2).then(|| rng.gen_range(0..3));
    Expression::Link {
        body: Box::new(body),
        index,
    }
}

fn gen_expr(rng: &mut impl Rng, names: &[String], me: usize, depth: u32) -> Expression {
    if depth == 0 || rng.gen_bool(0.15) {
        return gen_leaf(rng, names, me);
    }
    let d = depth - 1;
    let sub = |rng: &mut _| Box::new(gen_expr(rng, names, me, d));
    match rng.gen_range(0..17) {
        0..=2 => Expression::Sequence((0..rng.gen_range(2..=3)).map(|_| gen_expr(rng, names, me, d)).collect()),
        3 | 4 => Expression::Choice((0..rng.gen_range(2..=3)).map(|_| gen_expr(rng, names, me, d)).collect()),
        5 => Expression::Option(sub(rng)),
        6 => Expression::ZeroOrMore(sub(rng)),
        7 => Expression::OneOrMore(sub(rng)),
        8 => Expression::And(sub(rng)),
        9 => Expression::Not(sub(rng)),
        10 | 11 => Expression::New(sub(rng)),
        12 => Expression::LeftFold(sub(rng)),
        13..=15 => gen_link(rng, names, me, d),
        _ => gen_tag(rng),
    }
}

/// A production body: either a free-form expression or one of the common
/// construction idioms filled with random parts.
fn gen_production(rng: &mut impl Rng, names: &[String], me: usize) -> Expression {
    let part = |rng: &mut _| gen_expr(rng, names, me, 2);
    match rng.gen_range(0..6) {
        // { @A (sep @B)* #t }
        0 => Expression::New(Box::new(Expression::Sequence(vec![
            gen_link(rng, names, me, 1),
            Expression::ZeroOrMore(Box::new(Expression::Sequence(vec![
                gen_terminal(rng),
                gen_link(rng, names, me, 1),
            ]))),
            gen_tag(rng),
        ]))),
        // A {@ op #t @B }*
        1 => Expression::Sequence(vec![
            pick_name(rng, names, me),
            Expression::ZeroOrMore(Box::new(Expression::LeftFold(Box::new(Expression::Sequence(vec![
                gen_terminal(rng),
                gen_tag(rng),
                gen_link(rng, names, me, 1),
            ]))))),
        ]),
        // { x #t } / { y @A #u } / z
        2 => Expression::Choice(vec![
            Expression::New(Box::new(Expression::Sequence(vec![part(rng), gen_tag(rng)]))),
            Expression::New(Box::new(Expression::Sequence(vec![
                gen_terminal(rng),
                gen_link(rng, names, me, 1),
                gen_tag(rng),
            ]))),
            part(rng),
        ]),
        3 => Expression::New(Box::new(gen_expr(rng, names, me, 3))),
        _ => gen_expr(rng, names, me, 3),
    }
}

/// A random grammar with 1..=8 productions that validates without errors.
pub fn random_grammar(rng: &mut impl Rng) -> Grammar {
    loop {
        let n = rng.gen_range(1..=MAX_PRODUCTIONS);
        let names: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
        let prods: Vec<(String, Expression)> = names
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), gen_production(rng, &names, i)))
            .collect();
        let g = Grammar::from_productions(prods);
        if !validate(&g).iter().any(|d| d.is_error()) {
            return g;
        }
    }
}

/// An input that tends to follow the grammar, truncated to `MAX_INPUT`.
fn sample(rng: &mut impl Rng, g: &Grammar, e: &Expression, depth: u32, out: &mut Vec<u8>) {
    if out.len() >= MAX_INPUT {
        return;
    }
    match e {
        Expression::Terminal(b) => out.extend_from_slice(b),
        Expression::CharClass(r) => out.push(rng.gen_range(r[0].lo..=r[0].hi)),
        Expression::AnyChar => out.push(*ALPHABET.choose(rng).unwrap()),
        Expression::Nonterminal(n) if depth > 0 => sample(rng, g, g.get(n).unwrap(), depth - 1, out),
        Expression::Sequence(items) => items.iter().for_each(|x| sample(rng, g, x, depth, out)),
        Expression::Choice(items) => {
            let alt = items.choose(rng).unwrap();
            sample(rng, g, alt, depth, out)
        }
        Expression::Option(b) if rng.gen_bool(0.5) => sample(rng, g, b, depth, out),
        Expression::ZeroOrMore(b) | Expression::OneOrMore(b) => {
            for _ in 0..rng.gen_range(0..=3) {
                sample(rng, g, b, depth, out);
            }
        }
        Expression::New(b) | Expression::LeftFold(b) | Expression::Link { body: b, .. } => {
            sample(rng, g, b, depth, out)
        }
        _ => {}
    }
}

fn candidate_input(rng: &mut impl Rng, g: &Grammar) -> Vec<u8> {
    let mut out = Vec::new();
    if rng.gen_bool(0.75) {
        sample(rng, g, g.get(g.start()).unwrap(), 6, &mut out);
        if rng.gen_bool(0.3) {
            out.push(*ALPHABET.choose(rng).unwrap());
        }
    } else {
        let len = rng.gen_range(0..=MAX_INPUT);
        out.extend((0..len).map(|_| *ALPHABET.choose(rng).unwrap()));
    }
    out.truncate(MAX_INPUT);
    out
}

/// An input for `g`: of a few candidates, the one on which the reference
/// interpreter consumes the most and builds the largest tree.
pub fn random_input(rng: &mut impl Rng, g: &Grammar) -> Vec<u8> {
    let score = |input: &[u8]| match oracle(g, input, 20_000) {
        OracleOutcome::Match { consumed, root } => (1, consumed, root.distinct_count()),
        _ => (0, 0, 0),
    };
    (0..6)
        .map(|_| candidate_input(rng, g))
        .max_by_key(|input| score(input))
        .unwrap()
}

/// `count` (grammar, input) pairs; each grammar contributes several inputs.
pub fn corpus(seed: u64, count: usize) -> Vec<(Grammar, Vec<u8>)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = random_grammar(&mut rng);
        for _ in 0..3 {
            if out.len() < count {
                let input = random_input(&mut rng, &g);
                out.push((g.clone(), input));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Reference interpreter

#[derive(Clone, Debug)]
struct ONode {
    tag: Option<String>,
    start: usize,
    end: usize,
    children: Vec<Option<usize>>,
}

#[derive(Clone, Debug)]
struct OState {
    pos: usize,
    left: Option<usize>,
    stack: Vec<Option<usize>>,
    nodes: Vec<ONode>,
}

#[derive(Debug, PartialEq)]
pub enum OracleOutcome {
    Match { consumed: usize, root: Node },
    NoMatch { farthest: usize },
    OutOfBudget,
}

struct OutOfBudget;

pub struct Oracle<'g> {
    g: &'g Grammar,
    input: &'g [u8],
    st: OState,
    farthest: usize,
    steps: u64,
    budget: u64,
    pub fold_from_left: bool,
}

impl<'g> Oracle<'g> {
    pub fn new(g: &'g Grammar, input: &'g [u8], budget: u64) -> Self {
        Oracle {
            g,
            input,
            st: OState {
                pos: 0,
                left: None,
                stack: Vec::new(),
                nodes: Vec::new(),
            },
            farthest: 0,
            steps: 0,
            budget,
            fold_from_left: true,
        }
    }

    pub fn run(mut self) -> OracleOutcome {
        let start = self.g.get(self.g.start()).unwrap();
        match self.eval(start) {
            Err(OutOfBudget) => OracleOutcome::OutOfBudget,
            Ok(false) => OracleOutcome::NoMatch {
                farthest: self.farthest,
            },
            Ok(true) => {
                let source: Arc<[u8]> = Arc::from(self.input);
                let consumed = self.st.pos;
                let root = match self.st.left {
                    Some(id) => self.build(id, &source),
                    None => Node::new("token".into(), 0, consumed, source, Vec::new()),
                };
                OracleOutcome::Match { consumed, root }
            }
        }
    }

    fn build(&self, root: usize, source: &Arc<[u8]>) -> Node {
        // Depth-first in child order; an edge back to a node under
        // construction is dropped.
        #[derive(Clone, Copy, PartialEq)]
        enum V {
            Fresh,
            Open,
            Done,
        }
        let nodes = &self.st.nodes;
        let mut state = vec![V::Fresh; nodes.len()];
        let mut built: Vec<Option<Node>> = vec![None; nodes.len()];
        fn go(i: usize, nodes: &[ONode], state: &mut [V], built: &mut [Option<Node>], src: &Arc<[u8]>) {
            state[i] = V::Open;
            for c in nodes[i].children.iter().flatten() {
                if state[*c] == V::Fresh {
                    go(*c, nodes, state, built, src);
                }
            }
            let children: Vec<Node> = nodes[i]
                .children
                .iter()
                .flatten()
                .filter_map(|c| built[*c].clone())
                .collect();
            let tag = nodes[i].tag.clone().unwrap_or_else(|| {
                if children.is_empty() { "token" } else { "tree" }.to_string()
            });
            let n = &nodes[i];
            built[i] = Some(Node::new(tag.into(), n.start, n.end.max(n.start), src.clone(), children));
            state[i] = V::Done;
        }
        go(root, nodes, &mut state, &mut built, source);
        built[root].clone().unwrap()
    }

    fn fail(&mut self) -> Result<bool, OutOfBudget> {
        self.farthest = self.farthest.max(self.st.pos);
        Ok(false)
    }

    fn eval(&mut self, e: &Expression) -> Result<bool, OutOfBudget> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(OutOfBudget);
        }
        let input = self.input;
        match e {
            Expression::Empty => Ok(true),
            Expression::Terminal(t) => {
                if input[self.st.pos..].starts_with(t) {
                    self.st.pos += t.len();
                    Ok(true)
                } else {
                    self.fail()
                }
            }
            Expression::CharClass(ranges) => match input.get(self.st.pos) {
                Some(b) if ranges.iter().any(|r| r.contains(*b)) => {
                    self.st.pos += 1;
                    Ok(true)
                }
                _ => self.fail(),
            },
            Expression::AnyChar => {
                if self.st.pos < input.len() {
                    self.st.pos += 1;
                    Ok(true)
                } else {
                    self.fail()
                }
            }
            Expression::Nonterminal(n) => {
                let g = self.g;
                self.eval(g.get(n).unwrap())
            }
            Expression::Sequence(items) => {
                for x in items {
                    if !self.eval(x)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Expression::Choice(items) => {
                for x in items {
                    let snapshot = self.st.clone();
                    if self.eval(x)? {
                        return Ok(true);
                    }
                    self.st = snapshot;
                }
                Ok(false)
            }
            Expression::Option(b) => {
                let snapshot = self.st.clone();
                if !self.eval(b)? {
                    self.st = snapshot;
                }
                Ok(true)
            }
            Expression::ZeroOrMore(b) => {
                self.repeat(b)?;
                Ok(true)
            }
            Expression::OneOrMore(b) => {
                if !self.eval(b)? {
                    return Ok(false);
                }
                self.repeat(b)?;
                Ok(true)
            }
            Expression::And(b) | Expression::Not(b) => {
                let snapshot = self.st.clone();
                let ok = self.eval(b)?;
                self.st = snapshot;
                Ok(ok == matches!(e, Expression::And(_)))
            }
            Expression::New(b) => {
                let id = self.alloc(self.st.pos, Vec::new());
                self.st.left = Some(id);
                if !self.eval(b)? {
                    return Ok(false);
                }
                self.st.nodes[id].end = self.st.pos;
                self.st.left = Some(id);
                Ok(true)
            }
            Expression::LeftFold(b) => {
                let prior = self.st.left;
                let pos = self.st.pos;
                let start = match prior {
                    Some(p) if self.fold_from_left => self.st.nodes[p].start.min(pos),
                    _ => pos,
                };
                let id = self.alloc(start, prior.into_iter().map(Some).collect());
                self.st.left = Some(id);
                if !self.eval(b)? {
                    return Ok(false);
                }
                self.st.nodes[id].end = self.st.pos;
                self.st.left = Some(id);
                Ok(true)
            }
            Expression::Link { body, index } => {
                self.st.stack.push(self.st.left);
                if !self.eval(body)? {
                    return Ok(false);
                }
                let parent = self.st.stack.pop().unwrap();
                let child = self.st.left;
                self.st.left = parent;
                if let (Some(p), Some(c)) = (parent, child) {
                    if p != c {
                        let kids = &mut self.st.nodes[p].children;
                        match index {
                            None => kids.push(Some(c)),
                            Some(i) => {
                                if kids.len() <= *i {
                                    kids.resize(i + 1, None);
                                }
                                kids[*i] = Some(c);
                            }
                        }
                    }
                }
                Ok(true)
            }
            Expression::Tag(t) => {
                if let Some(id) = self.st.left {
                    self.st.nodes[id].tag = Some(t.clone());
                }
                Ok(true)
            }
        }
    }

    fn repeat(&mut self, b: &Expression) -> Result<(), OutOfBudget> {
        loop {
            let snapshot = self.st.clone();
            if !self.eval(b)? || self.st.pos == snapshot.pos {
                self.st = snapshot;
                return Ok(());
            }
        }
    }

    fn alloc(&mut self, start: usize, children: Vec<Option<usize>>) -> usize {
        self.st.nodes.push(ONode {
            tag: None,
            start,
            end: start,
            children,
        });
        self.st.nodes.len() - 1
    }
}

/// The reference result for `input` under `g`.
pub fn oracle(g: &Grammar, input: &[u8], budget: u64) -> OracleOutcome {
    Oracle::new(g, input, budget).run()
}

/// Runs `f` on a thread with a large stack.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(f)
        .unwrap()
        .join()
        .unwrap()
}
