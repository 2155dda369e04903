//! Static checks and memo-point assignment, without parsing anything.
//!
//! Run with `cargo run --example grammar_check`.

use pegtx::grammar::{assign_memo_points, parse_grammar_source, validate};

const GRAMMARS: &[(&str, &str)] = &[
    ("math", include_str!("grammars/math.peg")),
    ("left recursion", include_str!("grammars/left_recursive.peg")),
    ("undefined and nullable", "S = { (@Item)* }\nItem = Word?\n"),
    ("stray tag", "S = 'a' #Lost\n"),
    ("syntax error", "S = { 'a' \n"),
];

fn main() {
    for (name, source) in GRAMMARS {
        println!("== {name}");
        let grammar = match parse_grammar_source(source) {
            Ok(g) => g,
            Err(diagnostics) => {
                diagnostics.iter().for_each(|d| println!("  {d}"));
                continue;
            }
        };
        print!("{}", grammar.to_source().lines().map(|l| format!("  | {l}\n")).collect::<String>());
        let diagnostics = validate(&grammar);
        if diagnostics.is_empty() {
            println!("  no diagnostics");
        }
        for d in &diagnostics {
            println!("  {d}");
        }
        let plan = assign_memo_points(&grammar);
        for (nt, id) in plan.link_points() {
            println!("  m{}: memoized link to {nt}", id.index());
        }
        for (nt, id) in plan.nonterminal_points() {
            println!("  m{}: memoized call to {nt} (builds no AST)", id.index());
        }
    }
}
