//! Driving the AST machine by hand: node mutations are logged, and backtracking
//! is just discarding the log past a save point.
//!
//! Run with `cargo run --example transactions`.

use std::sync::Arc;

use pegtx::machine::Machine;

fn main() {
    let source: Arc<[u8]> = Arc::from(&b"1+2"[..]);
    let mut m = Machine::new(source);

    // { @Number '+' @Number #Add } over "1+2", by hand.
    let outer = m.tx_save();
    let add = m.emit_new(0);

    let number = |m: &mut Machine, at: usize| {
        m.emit_link_start();
        let n = m.emit_new(at);
        m.emit_tag("Int".into());
        m.emit_capture(n, at + 1);
        m.emit_link_end(None);
    };
    number(&mut m, 0);

    // A speculative alternative that links a node and then fails.
    let attempt = m.tx_save();
    number(&mut m, 2);
    m.emit_tag("Oops".into());
    println!("log inside the failed alternative:\n{}", m.dump_log());
    m.tx_abort(&attempt);
    println!("log after abort:\n{}", m.dump_log());

    number(&mut m, 2);
    m.emit_tag("Add".into());
    m.emit_capture(add, 3);
    println!("log before commit:\n{}", m.dump_log());

    let root = m.tx_commit(&outer).expect("log is consistent").expect("a node was built");
    println!("committed tree: {root}");
    println!("records created: {}", m.nodes_created());
    println!("mutations after commit: {}", m.mutation_violations());
    assert_eq!(root.to_string(), "#Add[#Int['1'] #Int['2']]");

    // A memo point commits its node early; later uses link the same
    // immutable node instead of rebuilding it.
    let mut m = Machine::new(Arc::from(&b"7"[..]));
    let outer = m.tx_save();
    let pair = m.emit_new(0);
    m.emit_link_start();
    let point = m.tx_save();
    let seven = m.emit_new(0);
    m.emit_tag("Int".into());
    m.emit_capture(seven, 1);
    let shared = m.tx_commit(&point).unwrap().expect("the body built a node");
    m.emit_link_end(None);
    m.emit_link_start();
    m.load_left(shared.clone());
    m.emit_link_end(None);
    m.emit_tag("Twice".into());
    m.emit_capture(pair, 1);
    let root = m.tx_commit(&outer).unwrap().unwrap();
    println!("\nshared child: {root}");
    println!("same node twice: {}", root.children()[0].ptr_eq(&root.children()[1]));
    println!("distinct nodes: {}", root.distinct_count());
}
