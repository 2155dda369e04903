//! Packrat memoization at link points: what the statistics count, how the
//! window bounds the table, and why memoized nodes can be shared.
//!
//! Run with `cargo run --example memoization`.

use pegtx::{ParseOptions, Parser};

fn main() {
    // Both alternatives start with the same link, so the second one finds
    // `A` already memoized at offset 0 and links the very same node.
    let parser = Parser::from_source("S = { @A 'x' #X } / { @A 'y' #Y }\nA = { [0-9]+ #Num }").unwrap();
    for (label, opts) in [("memo on", ParseOptions::default()), ("memo off", ParseOptions::without_memo())] {
        let r = parser.parse_with(b"123y", &opts).unwrap();
        println!("{label}: {}", r.root);
        println!(
            "  lookups {} hits {} backtracked {} nodes created {} unused {}",
            r.stats.memo_lookups,
            r.stats.memo_hits,
            r.stats.backtrack_total,
            r.stats.nodes_created,
            r.stats.nodes_unused()
        );
    }

    // Where the memo points are.
    let plan = parser.memo_plan();
    for (name, id) in plan.link_points() {
        println!("link point m{} for @{name}", id.index());
    }

    // A grammar whose choices retry the same subtree: with memoization the
    // work is linear, without it every level multiplies it. A window shorter
    // than the backtracking distance forgets entries before they are reused.
    let nested = Parser::from_source(
        "T = { '(' @T @T ')' 'a' #A } / { '(' @T @T ')' 'b' #B } / { '(' @T @T ')' #N } / { 'x' #L }",
    )
    .unwrap();
    let mut input = String::from("x");
    for _ in 0..6 {
        input = format!("({input}{input})");
    }
    println!("\nnested input of {} bytes", input.len());
    for (label, opts) in [
        ("memo on, window 4096", ParseOptions { window: 4096, ..ParseOptions::default() }),
        ("memo on, window 8", ParseOptions { window: 8, ..ParseOptions::default() }),
        ("memo off", ParseOptions::without_memo()),
    ] {
        let start = std::time::Instant::now();
        let r = nested.parse_with(input.as_bytes(), &opts).unwrap();
        println!(
            "{label:<22} consumed {} lookups {:>5} hits {:>5} backtrack ratio {:>8.2} in {:?}",
            r.consumed,
            r.stats.memo_lookups,
            r.stats.memo_hits,
            r.stats.backtrack_ratio(),
            start.elapsed()
        );
    }

    // Plain recognition skips AST entries entirely.
    let r = nested.parse_with(input.as_bytes(), &ParseOptions::recognize()).unwrap();
    println!("recognize only: consumed {}, root #{} spanning {:?}", r.consumed, r.root.tag(), r.root.span());
}
