//! Packrat memoization over a sliding window of input positions.
//!
//! Rows live in a ring indexed by `pos % W`. Each row remembers which
//! position it currently holds, so a lookup never answers from a row that
//! has been recycled for another position. Independently of collisions, an
//! entry falls out of reach once the parse frontier moves more than `W`
//! positions past it.

use crate::ast::Node;
use crate::grammar::MemoId;

pub const DEFAULT_WINDOW: usize = 256;

#[derive(Clone, Debug)]
pub enum Outcome {
    /// `node` is `None` for memo points that build no AST.
    Success { consumed: usize, node: Option<Node> },
    Failure,
}

#[derive(Clone, Debug)]
pub struct MemoEntry {
    pub outcome: Outcome,
    /// Farthest position at which any terminal failed while evaluating the
    /// memoized body; keeps error positions independent of memoization.
    pub farthest: usize,
}

struct Row {
    pos: Option<usize>,
    slots: Vec<Option<MemoEntry>>,
}

pub struct MemoTable {
    window: usize,
    points: usize,
    rows: Vec<Row>,
    furthest: usize,
    lookups: u64,
    hits: u64,
}

impl MemoTable {
    /// A table for `points` memo ids over an input of `input_len` bytes. The
    /// ring never needs more rows than there are positions.
    pub fn new(points: usize, window: usize, input_len: usize) -> Self {
        assert!(window >= 1, "window must hold at least one position");
        let ring = window.min(input_len + 1);
        let rows = (0..ring)
            .map(|_| Row {
                pos: None,
                slots: vec![None; points],
            })
            .collect();
        MemoTable {
            window,
            points,
            rows,
            furthest: 0,
            lookups: 0,
            hits: 0,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn furthest(&self) -> usize {
        self.furthest
    }

    pub fn lookups(&self) -> u64 {
        self.lookups
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    /// Moves the parse frontier forward; it never moves back.
    pub fn slide_to(&mut self, pos: usize) {
        self.furthest = self.furthest.max(pos);
    }

    fn reachable(&self, pos: usize) -> bool {
        pos + self.window >= self.furthest
    }

    pub fn lookup(&mut self, m: MemoId, pos: usize) -> Option<&MemoEntry> {
        self.lookups += 1;
        self.slide_to(pos);
        if !self.reachable(pos) {
            return None;
        }
        let ring = self.rows.len();
        let row = &self.rows[pos % ring];
        if row.pos != Some(pos) {
            return None;
        }
        let entry = row.slots[m.index()].as_ref()?;
        self.hits += 1;
        Some(entry)
    }

    /// Stores an entry; a later store at the same key replaces it.
    pub fn memoize(&mut self, m: MemoId, pos: usize, entry: MemoEntry) {
        self.slide_to(pos);
        let ring = self.rows.len();
        let row = &mut self.rows[pos % ring];
        if row.pos != Some(pos) {
            row.pos = Some(pos);
            row.slots.iter_mut().for_each(|s| *s = None);
        }
        row.slots[m.index()] = Some(entry);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn success(consumed: usize) -> MemoEntry {
        MemoEntry {
            outcome: Outcome::Success {
                consumed,
                node: None,
            },
            farthest: 0,
        }
    }

    fn consumed(e: Option<&MemoEntry>) -> Option<usize> {
        match e?.outcome {
            Outcome::Success { consumed, .. } => Some(consumed),
            Outcome::Failure => None,
        }
    }

    #[test]
    fn store_and_load() {
        let mut t = MemoTable::new(2, 16, 200);
        t.memoize(MemoId(0), 5, success(3));
        assert_eq!(consumed(t.lookup(MemoId(0), 5)), Some(3));
        assert!(t.lookup(MemoId(1), 5).is_none());
        assert_eq!((t.lookups(), t.hits()), (2, 1));
    }

    #[test]
    fn entries_expire_behind_the_window() {
        let mut t = MemoTable::new(1, 16, 200);
        t.memoize(MemoId(0), 5, success(1));
        t.slide_to(100);
        assert!(t.lookup(MemoId(0), 5).is_none());
    }

    #[test]
    fn ring_collision_is_not_a_hit() {
        let mut t = MemoTable::new(1, 4, 200);
        t.memoize(MemoId(0), 1, success(1));
        t.memoize(MemoId(0), 5, success(2));
        assert!(t.lookup(MemoId(0), 1).is_none());
        assert_eq!(consumed(t.lookup(MemoId(0), 5)), Some(2));
    }

    #[test]
    fn last_store_wins() {
        let mut t = MemoTable::new(1, 8, 10);
        t.memoize(MemoId(0), 2, success(1));
        t.memoize(MemoId(0), 2, success(4));
        assert_eq!(consumed(t.lookup(MemoId(0), 2)), Some(4));
    }

    #[test]
    fn failures_are_remembered() {
        let mut t = MemoTable::new(1, 8, 10);
        t.memoize(
            MemoId(0),
            3,
            MemoEntry {
                outcome: Outcome::Failure,
                farthest: 7,
            },
        );
        let e = t.lookup(MemoId(0), 3).unwrap();
        assert!(matches!(e.outcome, Outcome::Failure));
        assert_eq!(e.farthest, 7);
    }

    #[test]
    fn window_of_one_still_answers_the_frontier() {
        let mut t = MemoTable::new(1, 1, 10);
        t.memoize(MemoId(0), 4, success(0));
        assert_eq!(consumed(t.lookup(MemoId(0), 4)), Some(0));
        t.memoize(MemoId(0), 5, success(0));
        assert!(t.lookup(MemoId(0), 4).is_none());
    }
}
