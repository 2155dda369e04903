//! A PEG toolkit with declarative AST construction.
//!
//! Grammars annotate ordinary parsing expressions with four AST operators:
//! constructors `{ e }`, tags `#t`, links `@e` / `@[n]e` and left folds
//! `{@ e }`. Evaluation logs node mutations in a transactional machine so
//! that backtracking simply discards them, and packrat memoization commits
//! nodes at memo points so memoized results are never mutated afterwards.
//!
//! ```
//! use pegtx::Parser;
//!
//! let parser = Parser::from_source(
//!     "Expr = Term {@ (',' @Term) #Pair }*
//!      Term = { [A-z] #Term }",
//! )
//! .unwrap();
//! let result = parser.parse(b"A,B,C").unwrap();
//! assert_eq!(
//!     result.root.to_string(),
//!     "#Pair[#Pair[#Term['A'] #Term['B']] #Term['C']]"
//! );
//! ```
//!
//! The `examples/` directory has one runnable program per capability:
//! `figures`, `math`, `transactions`, `memoization`, `grammar_check`,
//! `notation` and `csv_stats`.

pub mod ast;
pub mod cli;
pub mod grammar;
pub mod interp;
pub mod machine;
pub mod packrat;

pub use ast::{parse_notation, Node};
pub use grammar::{parse_grammar_source, Expression, Grammar};
pub use interp::{GrammarError, ParseError, ParseOptions, ParseResult, Parser, Stats};
