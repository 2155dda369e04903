//! The basic AST operators, one small grammar at a time.
//!
//! Run with `cargo run --example figures`.

use pegtx::{ParseOptions, Parser};

fn show(title: &str, grammar: &str, start: Option<&str>, input: &str) {
    let parser = Parser::from_source(grammar).expect("grammar is valid");
    let opts = ParseOptions {
        start: start.map(str::to_string),
        ..ParseOptions::default()
    };
    let result = parser.parse_with(input.as_bytes(), &opts).expect("input matches");
    println!("{title:<28} {input:<10} => {}", result.root);
}

fn main() {
    // A constructor `{ e }` builds a node spanning what `e` consumed.
    let tagging = "Value = { [0-9]+ }\nNumber = { [0-9]+ } #Int";
    show("untagged constructor", tagging, Some("Value"), "12");
    show("tag after constructor", tagging, Some("Number"), "12");

    // A tag may sit anywhere inside or right after the constructor.
    show("tag inside, leading", "Number = { #Int [0-9]+ }", None, "12");
    show("tag inside, trailing", "Number = { [0-9]+ #Int }", None, "12");
    show("tag through a call", "Number = Value #Int\nValue = { [0-9]+ }", None, "12");

    // A later tag replaces an earlier one.
    let retag = "Number = { [0-9]+ #Int ([Ll] #Long)? }";
    show("retagging by suffix", retag, None, "12");
    show("retagging by suffix", retag, None, "12L");

    // Links `@e` append children; `@[n]e` stores into slot n.
    let additive = "\
        Additive = { @Number '+' @Number #Add }
        Swapped = { @[1]Number '+' @[0]Number #Add }
        Many = { @Number ('+' @Number)+ #Add }
        FirstLast = { @Number ('+' @[1]Number)+ #Add }
        Number = { [0-9]+ #Int }";
    show("links", additive, Some("Additive"), "1+2");
    show("indexed links", additive, Some("Swapped"), "1+2");
    show("links under repetition", additive, Some("Many"), "1+2+3+4");
    show("overwritten index", additive, Some("FirstLast"), "1+2+3+4");

    // Three shapes for the same comma-separated input.
    let term = "Term = { [A-z] #Term }";
    show(
        "flat list",
        &format!("Expr = List / Term\nList = {{ @Term (',' @Term)+ #List }}\n{term}"),
        None,
        "A,B,C,D",
    );
    show(
        "right-nested pairs",
        &format!("Expr = Pair / Term\nPair = {{ @Term ',' @Expr #Pair }}\n{term}"),
        None,
        "A,B,C,D",
    );
    // A left fold `{@ e }` wraps the node built so far as the first child.
    show(
        "left-folded pairs",
        &format!("Expr = Term {{@ (',' @Term) #Pair }}*\n{term}"),
        None,
        "A,B,C,D",
    );
}
