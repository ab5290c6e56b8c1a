//! Text syntax for LTL formulae.
//!
//! Operators: `[]` `<>` `~` `X` (unary), `U` `R`, `/\`, `\/`, `->`;
//! precedence from tightest to loosest is unary, U/R, /\, \/, -> with
//! the binary temporal operators right-associative. Atoms are `enabled`,
//! `t-enabled`, `true`, `false` and `reachable(...)` with entries like
//! `A@3` (place 3 labelled A) or `A` (any place labelled A), separated
//! by `;`.

use std::collections::BTreeMap;

use super::{Atom, Formula, FormulaError, MarkingPattern};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Box_,
    Diamond,
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Semi,
    At,
    Int(u64),
    Ident(String),
    Str(String),
}

fn lex(input: &str) -> Result<Vec<(usize, Token)>, FormulaError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            ')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            ';' => {
                tokens.push((i, Token::Semi));
                i += 1;
            }
            '@' => {
                tokens.push((i, Token::At));
                i += 1;
            }
            '~' => {
                tokens.push((i, Token::Not));
                i += 1;
            }
            '[' => {
                if bytes.get(i + 1) == Some(&b']') {
                    tokens.push((i, Token::Box_));
                    i += 2;
                } else {
                    return Err(syntax(i, "expected `[]`"));
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((i, Token::Diamond));
                    i += 2;
                } else {
                    return Err(syntax(i, "expected `<>`"));
                }
            }
            '/' => {
                if bytes.get(i + 1) == Some(&b'\\') {
                    tokens.push((i, Token::And));
                    i += 2;
                } else {
                    return Err(syntax(i, "expected `/\\`"));
                }
            }
            '\\' => {
                if bytes.get(i + 1) == Some(&b'/') {
                    tokens.push((i, Token::Or));
                    i += 2;
                } else {
                    return Err(syntax(i, "expected `\\/`"));
                }
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((i, Token::Implies));
                    i += 2;
                } else {
                    return Err(syntax(i, "expected `->`"));
                }
            }
            '"' => {
                let start = i + 1;
                let mut end = start;
                while end < bytes.len() && bytes[end] != b'"' {
                    end += 1;
                }
                if end == bytes.len() {
                    return Err(syntax(i, "unterminated string"));
                }
                tokens.push((i, Token::Str(input[start..end].to_string())));
                i = end + 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let value: u64 = input[start..i]
                    .parse()
                    .map_err(|_| syntax(start, "number out of range"))?;
                tokens.push((start, Token::Int(value)));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                i += 1;
                while i < bytes.len() {
                    let b = bytes[i] as char;
                    if b.is_alphanumeric() || b == '_' {
                        i += 1;
                    } else if b == '-'
                        && bytes
                            .get(i + 1)
                            .map(|&n| (n as char).is_alphanumeric())
                            .unwrap_or(false)
                    {
                        // allow dashes inside identifiers (`t-enabled`)
                        // without swallowing `->`
                        i += 1;
                    } else {
                        break;
                    }
                }
                tokens.push((start, Token::Ident(input[start..i].to_string())));
            }
            _ => return Err(syntax(i, "unexpected character")),
        }
    }
    Ok(tokens)
}

fn syntax(at: usize, message: &str) -> FormulaError {
    FormulaError::Syntax { at, message: message.to_string() }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.tokens.get(self.pos).map(|(i, _)| *i).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.at(), what))
        }
    }

    fn implies(&mut self) -> Result<Formula, FormulaError> {
        let left = self.or()?;
        if self.peek() == Some(&Token::Implies) {
            self.pos += 1;
            let right = self.implies()?;
            Ok(Formula::Implies(Box::new(left), Box::new(right)))
        } else {
            Ok(left)
        }
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.and()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            let right = self.and()?;
            left = Formula::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut left = self.until_release()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            let right = self.until_release()?;
            left = Formula::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn until_release(&mut self) -> Result<Formula, FormulaError> {
        let left = self.unary()?;
        match self.peek() {
            Some(Token::Ident(name)) if name == "U" => {
                self.pos += 1;
                let right = self.until_release()?;
                Ok(Formula::Until(Box::new(left), Box::new(right)))
            }
            Some(Token::Ident(name)) if name == "R" => {
                self.pos += 1;
                let right = self.until_release()?;
                Ok(Formula::Release(Box::new(left), Box::new(right)))
            }
            _ => Ok(left),
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Some(Token::Box_) => {
                self.pos += 1;
                Ok(Formula::Always(Box::new(self.unary()?)))
            }
            Some(Token::Diamond) => {
                self.pos += 1;
                Ok(Formula::Eventually(Box::new(self.unary()?)))
            }
            Some(Token::Ident(name)) if name == "X" => {
                self.pos += 1;
                Ok(Formula::Next(Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, FormulaError> {
        let at = self.at();
        match self.bump() {
            Some(Token::LParen) => {
                let inner = self.implies()?;
                self.expect(Token::RParen, "expected `)`")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                "enabled" => Ok(Formula::Atom(Atom::Enabled)),
                "t-enabled" => Ok(Formula::Atom(Atom::TEnabled)),
                "reachable" => {
                    self.expect(Token::LParen, "expected `(` after reachable")?;
                    let pattern = self.pattern()?;
                    self.expect(Token::RParen, "expected `)` closing reachable")?;
                    Ok(Formula::Atom(Atom::Reachable(pattern)))
                }
                _ => Err(syntax(at, "unknown atom")),
            },
            _ => Err(syntax(at, "expected a formula")),
        }
    }

    fn pattern(&mut self) -> Result<MarkingPattern, FormulaError> {
        let mut by_id: BTreeMap<(String, u64), u64> = BTreeMap::new();
        let mut by_label: BTreeMap<String, u64> = BTreeMap::new();
        if self.peek() == Some(&Token::RParen) {
            return Ok(MarkingPattern::ByLabel(by_label));
        }
        loop {
            let at = self.at();
            let label = match self.bump() {
                Some(Token::Ident(name)) => name,
                Some(Token::Str(name)) => name,
                _ => return Err(syntax(at, "expected a place label")),
            };
            if self.peek() == Some(&Token::At) {
                self.pos += 1;
                let at = self.at();
                let id = match self.bump() {
                    Some(Token::Int(id)) => id,
                    _ => return Err(syntax(at, "expected a place id after `@`")),
                };
                *by_id.entry((label, id)).or_insert(0) += 1;
            } else {
                *by_label.entry(label).or_insert(0) += 1;
            }
            if self.peek() == Some(&Token::Semi) {
                self.pos += 1;
            } else {
                break;
            }
        }
        match (by_id.is_empty(), by_label.is_empty()) {
            (false, false) => Err(FormulaError::MixedPattern),
            (false, true) => Ok(MarkingPattern::ById(by_id)),
            _ => Ok(MarkingPattern::ByLabel(by_label)),
        }
    }
}

/// Parse the textual formula syntax.
pub fn parse_formula(input: &str) -> Result<Formula, FormulaError> {
    let tokens = lex(input)?;
    let mut parser = Parser { tokens, pos: 0, len: input.len() };
    let formula = parser.implies()?;
    if parser.pos != parser.tokens.len() {
        return Err(syntax(parser.at(), "trailing input after formula"));
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(input: &str) -> Formula {
        parse_formula(input).unwrap()
    }

    #[test]
    fn liveness_formula() {
        assert_eq!(
            p("[]<> enabled"),
            Formula::Always(Box::new(Formula::Eventually(Box::new(Formula::Atom(
                Atom::Enabled
            )))))
        );
    }

    #[test]
    fn t_enabled_and_implies() {
        assert_eq!(
            p("t-enabled -> enabled"),
            Formula::Implies(
                Box::new(Formula::Atom(Atom::TEnabled)),
                Box::new(Formula::Atom(Atom::Enabled))
            )
        );
    }

    #[test]
    fn reachable_by_id() {
        let MarkingPattern::ById(entries) = pattern_of(p("<> reachable(A@3 ; A@4)")) else {
            panic!("expected id pattern")
        };
        assert_eq!(entries[&("A".to_string(), 3)], 1);
        assert_eq!(entries[&("A".to_string(), 4)], 1);
    }

    #[test]
    fn reachable_by_label_counts_duplicates() {
        let MarkingPattern::ByLabel(entries) = pattern_of(p("reachable(A ; A)")) else {
            panic!("expected label pattern")
        };
        assert_eq!(entries["A"], 2);
    }

    #[test]
    fn reachable_empty_pattern() {
        let MarkingPattern::ByLabel(entries) = pattern_of(p("reachable()")) else {
            panic!("expected label pattern")
        };
        assert!(entries.is_empty());
    }

    #[test]
    fn mixed_pattern_is_rejected() {
        assert!(matches!(
            parse_formula("reachable(A@3 ; B)"),
            Err(FormulaError::MixedPattern)
        ));
    }

    #[test]
    fn precedence_unary_then_until_then_and_or_implies() {
        // ~a U b parses as (~a) U b
        assert_eq!(
            p("~enabled U t-enabled"),
            Formula::Until(
                Box::new(Formula::Not(Box::new(Formula::Atom(Atom::Enabled)))),
                Box::new(Formula::Atom(Atom::TEnabled))
            )
        );
        // a U b /\ c parses as (a U b) /\ c
        assert_eq!(
            p("enabled U t-enabled /\\ true"),
            Formula::And(
                Box::new(Formula::Until(
                    Box::new(Formula::Atom(Atom::Enabled)),
                    Box::new(Formula::Atom(Atom::TEnabled))
                )),
                Box::new(Formula::True)
            )
        );
        // a \/ b -> c parses as (a \/ b) -> c
        assert_eq!(
            p("true \\/ false -> false"),
            Formula::Implies(
                Box::new(Formula::Or(Box::new(Formula::True), Box::new(Formula::False))),
                Box::new(Formula::False)
            )
        );
    }

    #[test]
    fn until_is_right_associative() {
        assert_eq!(
            p("true U false U enabled"),
            Formula::Until(
                Box::new(Formula::True),
                Box::new(Formula::Until(
                    Box::new(Formula::False),
                    Box::new(Formula::Atom(Atom::Enabled))
                ))
            )
        );
    }

    #[test]
    fn negated_reachable_roundtrip() {
        let f = p("~ <> reachable(A@4 ; A@4)");
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn quoted_labels() {
        let MarkingPattern::ByLabel(entries) = pattern_of(p("reachable(\"odd label\")")) else {
            panic!("expected label pattern")
        };
        assert_eq!(entries["odd label"], 1);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert!(matches!(
            parse_formula("[] <"),
            Err(FormulaError::Syntax { at: 3, .. })
        ));
        assert!(parse_formula("enabled enabled").is_err());
        assert!(parse_formula("").is_err());
    }

    fn pattern_of(f: Formula) -> MarkingPattern {
        match f {
            Formula::Atom(Atom::Reachable(p)) => p,
            Formula::Always(inner)
            | Formula::Eventually(inner)
            | Formula::Not(inner)
            | Formula::Next(inner) => pattern_of(*inner),
            other => panic!("no pattern in {other:?}"),
        }
    }
}
