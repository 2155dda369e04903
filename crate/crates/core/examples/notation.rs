//! The tree notation `#tag[children]` / `#tag['text']`: printing, reading
//! back, structural equality and JSON.
//!
//! Run with `cargo run --example notation`.

use pegtx::{parse_notation, Parser};

fn main() {
    let parser = Parser::from_source(include_str!("grammars/pairs.peg")).unwrap();
    let tree = parser.parse(b"A,B,C").unwrap().root;

    let text = tree.to_string();
    println!("with leaf text:    {text}");
    println!("without leaf text: {}", tree.serialize(false));

    // Reading the notation back gives a structurally equal tree.
    let back = parse_notation(&text).expect("printed trees parse back");
    println!("round trip equal:  {}", back == tree);
    // The notation has no separators, so the rebuilt source is the leaf
    // texts laid end to end.
    println!("rebuilt source:    {:?}", String::from_utf8_lossy(back.source()));

    // Escapes in leaf text survive the round trip.
    let quoted = parse_notation(r"#Str['it\'s'] ").unwrap();
    println!("escaped leaf:      {quoted} has text {:?}", String::from_utf8_lossy(quoted.text()));

    match parse_notation("#Pair[#Term['A']") {
        Ok(_) => unreachable!(),
        Err(e) => println!("malformed input:   {e}"),
    }

    println!("json: {}", serde_json::to_string_pretty(&tree.to_json()).unwrap());
}
