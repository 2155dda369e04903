//! An arithmetic grammar whose trees are evaluated directly.
//!
//! Run with `cargo run --example math -- '(1+2)*3-4/5'`.

use pegtx::{Node, Parser};

const GRAMMAR: &str = include_str!("grammars/math.peg");

fn eval(node: &Node) -> Result<i64, String> {
    let text = || String::from_utf8_lossy(node.text()).into_owned();
    let operands = || -> Result<(i64, i64), String> {
        match node.children() {
            [a, b] => Ok((eval(a)?, eval(b)?)),
            _ => Err(format!("#{} needs two operands", node.tag())),
        }
    };
    match node.tag() {
        "Integer" => text().parse().map_err(|e| format!("{e}: {}", text())),
        "add" => operands().map(|(a, b)| a + b),
        "sub" => operands().map(|(a, b)| a - b),
        "mul" => operands().map(|(a, b)| a * b),
        "div" => match operands()? {
            (_, 0) => Err("division by zero".into()),
            (a, b) => Ok(a / b),
        },
        other => Err(format!("unexpected #{other}")),
    }
}

fn main() {
    let parser = Parser::from_source(GRAMMAR).expect("grammar is valid");
    let args: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if args.is_empty() {
        vec!["1+2*3".to_string(), "1-2-3".into(), "(1+2)*3-4/5".into(), "2*(3+4)*5".into()]
    } else {
        args
    };
    for input in &inputs {
        match parser.parse(input.as_bytes()) {
            Ok(r) if r.is_complete() => match eval(&r.root) {
                Ok(v) => println!("{input} = {v}\n  {}", r.root),
                Err(e) => println!("{input}: {e}"),
            },
            Ok(r) => println!("{input}: unexpected input at offset {}", r.consumed),
            Err(e) => println!("{input}: {e}"),
        }
    }
}
