//! The transactional AST machine.
//!
//! Register effects (the left node and the node stack) are applied eagerly
//! and restored from a [`TxMark`] on abort. Node mutations are appended to a
//! stack-based log and only replayed into node records by [`Machine::tx_commit`].

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{Node, DEFAULT_TOKEN_TAG, DEFAULT_TREE_TAG};

/// Identity of a node allocated in the log but not yet materialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VirtualNodeId(pub u32);

impl fmt::Display for VirtualNodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub enum NodeRef {
    Virtual(VirtualNodeId),
    Materialized(Node),
}

impl NodeRef {
    /// Identity comparison: same virtual id, or the same materialized record.
    pub fn same(&self, other: &NodeRef) -> bool {
        match (self, other) {
            (NodeRef::Virtual(a), NodeRef::Virtual(b)) => a == b,
            (NodeRef::Materialized(a), NodeRef::Materialized(b)) => a.ptr_eq(b),
            _ => false,
        }
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Virtual(v) => write!(f, "{v}"),
            NodeRef::Materialized(n) => write!(f, "#{}@{}..{}", n.tag(), n.start(), n.end()),
        }
    }
}

fn same_left(a: &Option<NodeRef>, b: &Option<NodeRef>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x.same(y),
        _ => false,
    }
}

/// One deferred node mutation.
#[derive(Clone, Debug)]
pub enum LogEntry {
    New {
        node: VirtualNodeId,
        start: usize,
    },
    Capture {
        node: VirtualNodeId,
        end: usize,
    },
    /// Overrides any earlier tag.
    Tag {
        node: VirtualNodeId,
        tag: Arc<str>,
    },
    /// Appends `child` to `parent`, or stores it at `index`.
    Link {
        parent: VirtualNodeId,
        child: NodeRef,
        index: Option<usize>,
    },
    /// Allocates `node` whose first child is the prior left node.
    Fold {
        node: VirtualNodeId,
        prior: Option<NodeRef>,
        start: usize,
    },
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEntry::New { node, start } => write!(f, "NEW {node} @{start}"),
            LogEntry::Capture { node, end } => write!(f, "CAPTURE {node} @{end}"),
            LogEntry::Tag { node, tag } => write!(f, "TAG {node} #{tag}"),
            LogEntry::Link {
                parent,
                child,
                index: Some(i),
            } => write!(f, "LINK {parent}[{i}] <- {child}"),
            LogEntry::Link { parent, child, .. } => write!(f, "LINK {parent} <- {child}"),
            LogEntry::Fold {
                node,
                prior: Some(p),
                start,
            } => write!(f, "FOLD {node} <- {p} @{start}"),
            LogEntry::Fold { node, start, .. } => write!(f, "FOLD {node} @{start}"),
        }
    }
}

/// A save point: log index, left register and node-stack depth.
#[derive(Clone, Debug)]
pub struct TxMark {
    log_len: usize,
    left: Option<NodeRef>,
    depth: usize,
    next_vid: u32,
}

impl TxMark {
    pub fn log_index(&self) -> usize {
        self.log_len
    }

    pub fn stack_depth(&self) -> usize {
        self.depth
    }
}

/// Where the span of a left-folded node starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FoldSpan {
    /// At the start of the folded-in left node, so the fold node's span
    /// covers all of its children.
    #[default]
    FromLeft,
    /// At the input position where the fold operator is reached.
    FromFoldPoint,
}

pub const DEFAULT_FOLD_SPAN: FoldSpan = FoldSpan::FromLeft;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("log entry refers to node {0}, which is not live in the committed range")]
    DanglingNode(VirtualNodeId),
}

#[derive(Clone, Copy)]
struct VidInfo {
    start: usize,
    materialized: bool,
}

struct Record {
    tag: Option<Arc<str>>,
    start: usize,
    end: Option<usize>,
    children: Vec<Option<NodeRef>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Visit {
    Fresh,
    Open,
    Done,
}

pub struct Machine {
    source: Arc<[u8]>,
    log: Vec<LogEntry>,
    left: Option<NodeRef>,
    stack: Vec<Option<NodeRef>>,
    vids: Vec<VidInfo>,
    fold_span: FoldSpan,
    tree_tag: Arc<str>,
    token_tag: Arc<str>,
    created: usize,
    violations: usize,
}

impl Machine {
    pub fn new(source: Arc<[u8]>) -> Self {
        Self::with_fold_span(source, DEFAULT_FOLD_SPAN)
    }

    pub fn with_fold_span(source: Arc<[u8]>, fold_span: FoldSpan) -> Self {
        Machine {
            source,
            log: Vec::new(),
            left: None,
            stack: Vec::new(),
            vids: Vec::new(),
            fold_span,
            tree_tag: DEFAULT_TREE_TAG.into(),
            token_tag: DEFAULT_TOKEN_TAG.into(),
            created: 0,
            violations: 0,
        }
    }

    pub fn source(&self) -> &Arc<[u8]> {
        &self.source
    }

    pub fn left(&self) -> Option<&NodeRef> {
        self.left.as_ref()
    }

    pub fn stack_depth(&self) -> usize {
        self.stack.len()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn log_index(&self) -> usize {
        self.log.len()
    }

    /// Node records built by commits so far.
    pub fn nodes_created(&self) -> usize {
        self.created
    }

    /// Number of mutations that were aimed at an already materialized node
    /// and therefore dropped. Zero in a correct interpreter.
    pub fn mutation_violations(&self) -> usize {
        self.violations
    }

    /// Counts live log entries whose mutation target has been materialized.
    pub fn audit(&self) -> usize {
        self.log
            .iter()
            .filter(|e| match e {
                LogEntry::Capture { node, .. } | LogEntry::Tag { node, .. } => self.is_materialized(*node),
                LogEntry::Link { parent, .. } => self.is_materialized(*parent),
                _ => false,
            })
            .count()
    }

    /// The live log, one entry per line.
    pub fn dump_log(&self) -> String {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    fn is_materialized(&self, v: VirtualNodeId) -> bool {
        self.vids[v.0 as usize].materialized
    }

    fn alloc(&mut self, start: usize) -> VirtualNodeId {
        let id = VirtualNodeId(self.vids.len() as u32);
        self.vids.push(VidInfo {
            start,
            materialized: false,
        });
        id
    }

    fn start_of(&self, r: &NodeRef) -> usize {
        match r {
            NodeRef::Virtual(v) => self.vids[v.0 as usize].start,
            NodeRef::Materialized(n) => n.start(),
        }
    }

    pub fn tx_save(&self) -> TxMark {
        TxMark {
            log_len: self.log.len(),
            left: self.left.clone(),
            depth: self.stack.len(),
            next_vid: self.vids.len() as u32,
        }
    }

    /// Whether the left register holds the same node it held at `mark`.
    pub fn left_unchanged_since(&self, mark: &TxMark) -> bool {
        same_left(&self.left, &mark.left)
    }

    /// Discards every entry logged since `mark` and restores the registers.
    pub fn tx_abort(&mut self, mark: &TxMark) {
        debug_assert!(mark.log_len <= self.log.len());
        self.log.truncate(mark.log_len);
        self.left.clone_from(&mark.left);
        self.stack.truncate(mark.depth);
    }

    /// Replays the entries logged since `mark` into node records and drops
    /// them from the log.
    ///
    /// Returns the materialized left node when the left register holds a node
    /// allocated inside the transaction (or is already materialized), and
    /// `None` when it holds nothing or a node that predates the transaction.
    pub fn tx_commit(&mut self, mark: &TxMark) -> Result<Option<Node>, MachineError> {
        let base = mark.next_vid as usize;
        let mut records: Vec<Option<Record>> = Vec::new();
        records.resize_with(self.vids.len() - base, || None);

        fn slot(
            records: &mut [Option<Record>],
            base: usize,
            v: VirtualNodeId,
        ) -> Result<&mut Record, MachineError> {
            (v.0 as usize)
                .checked_sub(base)
                .and_then(|i| records.get_mut(i))
                .and_then(Option::as_mut)
                .ok_or(MachineError::DanglingNode(v))
        }

        for entry in self.log.drain(mark.log_len..) {
            match entry {
                LogEntry::New { node, start } => {
                    records[node.0 as usize - base] = Some(Record {
                        tag: None,
                        start,
                        end: None,
                        children: Vec::new(),
                    });
                }
                LogEntry::Fold { node, prior, start } => {
                    records[node.0 as usize - base] = Some(Record {
                        tag: None,
                        start,
                        end: None,
                        children: prior.into_iter().map(Some).collect(),
                    });
                }
                LogEntry::Capture { node, end } => slot(&mut records, base, node)?.end = Some(end),
                LogEntry::Tag { node, tag } => slot(&mut records, base, node)?.tag = Some(tag),
                LogEntry::Link {
                    parent,
                    child,
                    index,
                } => {
                    let rec = slot(&mut records, base, parent)?;
                    match index {
                        None => rec.children.push(Some(child)),
                        Some(i) => {
                            if rec.children.len() <= i {
                                rec.children.resize(i + 1, None);
                            }
                            rec.children[i] = Some(child);
                        }
                    }
                }
            }
        }

        for rec in records.iter().flatten() {
            for child in rec.children.iter().flatten() {
                if let NodeRef::Virtual(c) = child {
                    let live = (c.0 as usize)
                        .checked_sub(base)
                        .and_then(|i| records.get(i))
                        .is_some_and(Option::is_some);
                    if !live {
                        return Err(MachineError::DanglingNode(*c));
                    }
                }
            }
        }

        self.created += records.iter().filter(|r| r.is_some()).count();
        for info in &mut self.vids[base..] {
            info.materialized = true;
        }

        let root = match &self.left {
            Some(NodeRef::Virtual(v)) if v.0 as usize >= base => {
                let i = v.0 as usize - base;
                if records[i].is_none() {
                    return Err(MachineError::DanglingNode(*v));
                }
                Some(self.materialize(&records, base, i))
            }
            Some(NodeRef::Materialized(n)) => Some(n.clone()),
            _ => None,
        };
        if let Some(n) = &root {
            self.left = Some(NodeRef::Materialized(n.clone()));
        }
        Ok(root)
    }

    /// Builds node `root` bottom-up. A child reference to a node that is
    /// still being built would close a cycle and is dropped.
    fn materialize(&self, records: &[Option<Record>], base: usize, root: usize) -> Node {
        let mut state = vec![Visit::Fresh; records.len()];
        let mut built: Vec<Option<Node>> = vec![None; records.len()];
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = Visit::Open;
        while let Some(&mut (i, ref mut next)) = work.last_mut() {
            let rec = records[i].as_ref().unwrap();
            if *next < rec.children.len() {
                let slot = &rec.children[*next];
                *next += 1;
                if let Some(NodeRef::Virtual(c)) = slot {
                    let c = c.0 as usize - base;
                    if state[c] == Visit::Fresh {
                        state[c] = Visit::Open;
                        work.push((c, 0));
                    }
                }
                continue;
            }
            work.pop();
            let children: Vec<Node> = rec
                .children
                .iter()
                .flatten()
                .filter_map(|r| match r {
                    NodeRef::Materialized(n) => Some(n.clone()),
                    NodeRef::Virtual(c) => built[c.0 as usize - base].clone(),
                })
                .collect();
            let tag = rec.tag.clone().unwrap_or_else(|| {
                if children.is_empty() {
                    self.token_tag.clone()
                } else {
                    self.tree_tag.clone()
                }
            });
            let end = rec.end.unwrap_or(rec.start).max(rec.start);
            built[i] = Some(Node::new(tag, rec.start, end, self.source.clone(), children));
            state[i] = Visit::Done;
        }
        built[root].take().unwrap()
    }

    /// Starts a constructor: allocates a node at `pos` and makes it the left node.
    pub fn emit_new(&mut self, pos: usize) -> VirtualNodeId {
        let node = self.alloc(pos);
        self.log.push(LogEntry::New { node, start: pos });
        self.left = Some(NodeRef::Virtual(node));
        node
    }

    /// Ends a constructor: records the end position and restores `node` as
    /// the left node.
    pub fn emit_capture(&mut self, node: VirtualNodeId, pos: usize) {
        if self.is_materialized(node) {
            self.violations += 1;
        } else {
            self.log.push(LogEntry::Capture { node, end: pos });
        }
        self.left = Some(NodeRef::Virtual(node));
    }

    /// Tags the left node. Without a left node the tag has nothing to apply to.
    pub fn emit_tag(&mut self, tag: Arc<str>) {
        match &self.left {
            Some(NodeRef::Virtual(v)) if !self.is_materialized(*v) => {
                self.log.push(LogEntry::Tag { node: *v, tag });
            }
            Some(_) => self.violations += 1,
            None => {}
        }
    }

    /// Pushes the left node; the matching [`Machine::emit_link_end`] links
    /// whatever the body leaves in the register into it.
    pub fn emit_link_start(&mut self) {
        self.stack.push(self.left.clone());
    }

    /// Replaces the left node with an already materialized one, as a memo
    /// hit does between link start and end.
    pub fn load_left(&mut self, node: Node) {
        self.left = Some(NodeRef::Materialized(node));
    }

    /// Pops the parent, links the current left node into it, and restores the
    /// parent as left. Nothing is linked when the body left the register
    /// unchanged.
    pub fn emit_link_end(&mut self, index: Option<usize>) {
        let parent = self.stack.pop().expect("link end without a matching start");
        let child = std::mem::replace(&mut self.left, parent);
        if same_left(&child, &self.left) {
            return;
        }
        let Some(child) = child else { return };
        match &self.left {
            Some(NodeRef::Virtual(p)) if !self.is_materialized(*p) => {
                self.log.push(LogEntry::Link {
                    parent: *p,
                    child,
                    index,
                });
            }
            Some(_) => self.violations += 1,
            None => {}
        }
    }

    /// Starts a left fold at `pos`: allocates a node holding the current left
    /// node as its first child and makes it the left node.
    pub fn emit_fold(&mut self, pos: usize) -> VirtualNodeId {
        let prior = self.left.take();
        let start = match (&prior, self.fold_span) {
            (Some(p), FoldSpan::FromLeft) => self.start_of(p).min(pos),
            _ => pos,
        };
        let node = self.alloc(start);
        self.log.push(LogEntry::Fold { node, prior, start });
        self.left = Some(NodeRef::Virtual(node));
        node
    }
}
