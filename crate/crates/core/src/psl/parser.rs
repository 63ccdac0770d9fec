//! Recursive-descent parser for property files.
//!
//! Precedence from tightest to loosest: `~ [] <>`, then `U R`, `&`, `|`,
//! `->`. Binary operators associate to the right. `#` starts a comment.

use std::collections::HashMap;

use super::{ArgPattern, Atom, Formula, ModalAtom, Modality, PslError, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Always,
    Eventually,
    Implies,
    And,
    Or,
    Not,
    LParen,
    RParen,
    Comma,
    Wildcard,
    Int(i64),
    Ident(String),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Always => "`[]`".into(),
            Tok::Eventually => "`<>`".into(),
            Tok::Implies => "`->`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Not => "`~`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Wildcard => "`_`".into(),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, PslError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let chars: Vec<char> = content.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, column });
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let fixed = match two.as_str() {
                "[]" => Some(Tok::Always),
                "<>" => Some(Tok::Eventually),
                "->" => Some(Tok::Implies),
                _ => None,
            };
            if let Some(tok) = fixed {
                push(&mut out, tok);
                i += 2;
                continue;
            }
            let single = match c {
                '&' => Some(Tok::And),
                '|' => Some(Tok::Or),
                '~' => Some(Tok::Not),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                _ => None,
            };
            if let Some(tok) = single {
                push(&mut out, tok);
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let s = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[s..i].iter().collect();
                let value = digits.parse().map_err(|_| PslError::Syntax {
                    line,
                    column,
                    message: format!("integer `{digits}` is too large"),
                })?;
                push(&mut out, Tok::Int(value));
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let s = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[s..i].iter().collect();
                push(
                    &mut out,
                    if word == "_" {
                        Tok::Wildcard
                    } else {
                        Tok::Ident(word)
                    },
                );
                continue;
            }
            return Err(PslError::Syntax {
                line,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    let (line, column) = out.last().map_or((1, 1), |t| (t.line, t.column + 1));
    out.push(Spanned {
        tok: Tok::End,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    arities: HashMap<String, usize>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> PslError {
        let t = &self.toks[self.pos];
        PslError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), PslError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn implication(&mut self) -> Result<Formula, PslError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, PslError> {
        let lhs = self.conjunction()?;
        if *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.disjunction()?;
            return Ok(Formula::or(lhs, rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, PslError> {
        let lhs = self.temporal()?;
        if *self.peek() == Tok::And {
            self.bump();
            let rhs = self.conjunction()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn temporal(&mut self) -> Result<Formula, PslError> {
        let lhs = self.unary()?;
        if self.is_ident("U") {
            self.bump();
            let rhs = self.temporal()?;
            return Ok(Formula::until(lhs, rhs));
        }
        if self.is_ident("R") {
            self.bump();
            let rhs = self.temporal()?;
            return Ok(Formula::release(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, PslError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                Ok(Formula::always(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.implication()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(_) => self.modal_atom().map(Formula::Atom),
            other => Err(self.error(format!("expected a formula, found {}", other.describe()))),
        }
    }

    fn modal_atom(&mut self) -> Result<ModalAtom, PslError> {
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        let Tok::Ident(name) = self.bump() else {
            unreachable!("caller checked for an identifier")
        };
        let Some(modality) = Modality::from_name(&name) else {
            if matches!(self.peek(), Tok::Ident(_)) {
                return Err(PslError::UnknownModality { name, line, column });
            }
            return Err(PslError::Syntax {
                line,
                column,
                message: format!("expected a modality (B, G, A, I, ID, P), found `{name}`"),
            });
        };
        if modality == Modality::P {
            let atom = if *self.peek() == Tok::LParen {
                self.bump();
                let atom = self.atom()?;
                self.expect(Tok::RParen)?;
                atom
            } else {
                self.atom()?
            };
            return Ok(ModalAtom {
                modality,
                agent: None,
                atom,
            });
        }
        let agent = match self.bump() {
            Tok::Ident(agent) => agent,
            other => {
                self.pos -= 1;
                return Err(self.error(format!(
                    "expected an agent name after `{name}`, found {}",
                    other.describe()
                )));
            }
        };
        let atom = self.atom()?;
        Ok(ModalAtom {
            modality,
            agent: Some(agent),
            atom,
        })
    }

    fn atom(&mut self) -> Result<Atom, PslError> {
        let predicate = match self.peek() {
            Tok::Ident(p) if p != "U" && p != "R" => p.clone(),
            other => {
                return Err(self.error(format!("expected an atom, found {}", other.describe())))
            }
        };
        self.bump();
        let mut args = Vec::new();
        // `pred(` starts an argument list only if the next token is a term;
        // otherwise the parenthesis belongs to the surrounding formula.
        if *self.peek() == Tok::LParen
            && matches!(self.peek_at(1), Tok::Wildcard | Tok::Int(_) | Tok::Ident(_))
            && matches!(self.peek_at(2), Tok::Comma | Tok::RParen)
        {
            self.bump();
            loop {
                args.push(match self.bump() {
                    Tok::Wildcard => ArgPattern::Wildcard,
                    Tok::Int(i) => ArgPattern::Const(Term::Int(i)),
                    Tok::Ident(s) => ArgPattern::Const(Term::Sym(s)),
                    other => {
                        self.pos -= 1;
                        return Err(
                            self.error(format!("expected an argument, found {}", other.describe()))
                        );
                    }
                });
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    other => {
                        self.pos -= 1;
                        return Err(
                            self.error(format!("expected `,` or `)`, found {}", other.describe()))
                        );
                    }
                }
            }
        }
        match self.arities.get(&predicate) {
            Some(&expected) if expected != args.len() => {
                return Err(PslError::ArityMismatch {
                    predicate,
                    expected,
                    found: args.len(),
                })
            }
            _ => {
                self.arities.insert(predicate.clone(), args.len());
            }
        }
        Ok(Atom { predicate, args })
    }
}

/// Parses one property; the text may span several lines.
pub fn parse_property(text: &str) -> Result<Formula, PslError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        arities: HashMap::new(),
    };
    let f = p.implication()?;
    if *p.peek() != Tok::End {
        return Err(p.error(format!("unexpected {}", p.peek().describe())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(pred: &str, args: &[&str]) -> Formula {
        Formula::Atom(ModalAtom {
            modality: Modality::B,
            agent: Some("vehicle".into()),
            atom: Atom {
                predicate: pred.into(),
                args: args
                    .iter()
                    .map(|a| match *a {
                        "_" => ArgPattern::Wildcard,
                        s => match s.parse::<i64>() {
                            Ok(i) => ArgPattern::Const(Term::Int(i)),
                            Err(_) => ArgPattern::Const(Term::Sym(s.into())),
                        },
                    })
                    .collect(),
            },
        })
    }

    #[test]
    fn always_eventually_belief() {
        let f = parse_property("[] <> B vehicle at(_,_)").unwrap();
        assert_eq!(
            f,
            Formula::always(Formula::eventually(b("at", &["_", "_"])))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse_property("B v a | B v b & B v c -> B v d -> B v e").unwrap();
        let a = |x: &str| parse_property(&format!("B v {x}")).unwrap();
        assert_eq!(
            p,
            Formula::implies(
                Formula::or(a("a"), Formula::and(a("b"), a("c"))),
                Formula::implies(a("d"), a("e"))
            )
        );
        let p = parse_property("~ B v a U B v b & B v c").unwrap();
        assert_eq!(
            p,
            Formula::and(Formula::until(Formula::not(a("a")), a("b")), a("c"))
        );
        let p = parse_property("B v a U B v b R B v c").unwrap();
        assert_eq!(p, Formula::until(a("a"), Formula::release(a("b"), a("c"))));
    }

    #[test]
    fn percept_forms() {
        let a = parse_property("P at(1,2)").unwrap();
        let b = parse_property("P(at(1,2))").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "P at(1,2)");
    }

    #[test]
    fn nullary_atom_before_paren_group() {
        let f = parse_property("B v halted & (B v a | B v b)").unwrap();
        assert!(matches!(f, Formula::And(..)));
    }

    #[test]
    fn missing_atom_is_syntax_error() {
        assert!(matches!(
            parse_property("B vehicle"),
            Err(PslError::Syntax { .. })
        ));
        assert!(matches!(
            parse_property("[] (B v a"),
            Err(PslError::Syntax { .. })
        ));
        assert!(matches!(
            parse_property("B v a B v b"),
            Err(PslError::Syntax { .. })
        ));
        assert!(matches!(parse_property(""), Err(PslError::Syntax { .. })));
    }

    #[test]
    fn unknown_modality() {
        assert_eq!(
            parse_property("<> X vehicle at(1,1)"),
            Err(PslError::UnknownModality {
                name: "X".into(),
                line: 1,
                column: 4
            })
        );
    }

    #[test]
    fn arity_mismatch() {
        assert_eq!(
            parse_property("B v at(1,1) & G v at(1)"),
            Err(PslError::ArityMismatch {
                predicate: "at".into(),
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn comments_and_multiline() {
        let f = parse_property("# header\n[] (B v a # trailing\n  -> <> G v b)\n").unwrap();
        assert_eq!(f.to_string(), "[] (B v a -> <> G v b)");
    }

    #[test]
    fn error_position_is_reported() {
        match parse_property("[] (B v a &\n  ))") {
            Err(PslError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }
}
