use super::Expression;

/// Rewrites an expression into core form: options become a choice with the
/// empty string, one-or-more becomes a sequence with a zero-or-more loop, and
/// and-predicates become double negation. Character classes stay native.
pub fn desugar(e: &Expression) -> Expression {
    match e {
        Expression::Option(body) => Expression::Choice(vec![desugar(body), Expression::Empty]),
        Expression::OneOrMore(body) => {
            let body = desugar(body);
            Expression::Sequence(vec![body.clone(), Expression::ZeroOrMore(Box::new(body))])
        }
        Expression::And(body) => {
            Expression::Not(Box::new(Expression::Not(Box::new(desugar(body)))))
        }
        Expression::Sequence(items) => Expression::Sequence(items.iter().map(desugar).collect()),
        Expression::Choice(items) => Expression::Choice(items.iter().map(desugar).collect()),
        Expression::ZeroOrMore(body) => Expression::ZeroOrMore(Box::new(desugar(body))),
        Expression::Not(body) => Expression::Not(Box::new(desugar(body))),
        Expression::New(body) => Expression::New(Box::new(desugar(body))),
        Expression::LeftFold(body) => Expression::LeftFold(Box::new(desugar(body))),
        Expression::Link { body, index } => Expression::Link {
            body: Box::new(desugar(body)),
            index: *index,
        },
        Expression::Empty
        | Expression::Terminal(_)
        | Expression::CharClass(_)
        | Expression::AnyChar
        | Expression::Nonterminal(_)
        | Expression::Tag(_) => e.clone(),
    }
}

/// Expands every character class into a prioritized choice of one-byte
/// terminals (a single terminal when the class holds one byte).
pub fn expand_char_classes(e: &Expression) -> Expression {
    match e {
        Expression::CharClass(ranges) => {
            let mut present = [false; 256];
            for r in ranges {
                for b in r.lo..=r.hi {
                    present[b as usize] = true;
                }
            }
            let alts: Vec<Expression> = (0..=255u8)
                .filter(|&b| present[b as usize])
                .map(|b| Expression::Terminal(vec![b]))
                .collect();
            Expression::choice(alts)
        }
        Expression::Sequence(items) => {
            Expression::Sequence(items.iter().map(expand_char_classes).collect())
        }
        Expression::Choice(items) => {
            Expression::Choice(items.iter().map(expand_char_classes).collect())
        }
        Expression::Option(b) => Expression::Option(Box::new(expand_char_classes(b))),
        Expression::ZeroOrMore(b) => Expression::ZeroOrMore(Box::new(expand_char_classes(b))),
        Expression::OneOrMore(b) => Expression::OneOrMore(Box::new(expand_char_classes(b))),
        Expression::And(b) => Expression::And(Box::new(expand_char_classes(b))),
        Expression::Not(b) => Expression::Not(Box::new(expand_char_classes(b))),
        Expression::New(b) => Expression::New(Box::new(expand_char_classes(b))),
        Expression::LeftFold(b) => Expression::LeftFold(Box::new(expand_char_classes(b))),
        Expression::Link { body, index } => Expression::Link {
            body: Box::new(expand_char_classes(body)),
            index: *index,
        },
        other => other.clone(),
    }
}
