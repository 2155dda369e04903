//! A deterministic grammar over generated CSV: no backtracking, every
//! created node ends up in the tree, and AST construction is measured
//! against plain recognition.
//!
//! Run with `cargo run --release --example csv_stats -- 100000`.

use std::time::Instant;

use pegtx::{ParseOptions, Parser};

fn generate(lines: usize) -> String {
    let mut out = String::new();
    for i in 0..lines {
        let fields = 1 + i % 4;
        let row: Vec<String> = (0..fields).map(|f| format!("r{i}f{f}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn main() {
    let lines = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let input = generate(lines);
    let parser = Parser::from_source(include_str!("grammars/csv.peg")).unwrap();

    let start = Instant::now();
    let ast = parser.parse(input.as_bytes()).unwrap();
    let ast_time = start.elapsed();
    let start = Instant::now();
    let plain = parser.parse_with(input.as_bytes(), &ParseOptions::recognize()).unwrap();
    let plain_time = start.elapsed();

    assert!(ast.is_complete() && plain.is_complete());
    println!("{lines} lines, {} rows in the tree", ast.root.children().len());
    print!("{}", ast.stats);
    println!("ast build time: {ast_time:?}, recognition time: {plain_time:?}");

    let s = &ast.stats;
    assert_eq!(s.backtrack_total, 0);
    assert_eq!(s.nodes_unused(), 0);
    for row in ast.root.children().iter().take(3) {
        println!("{row}");
    }
}
