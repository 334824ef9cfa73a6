//! Recursive-descent parser for the formula surface syntax.
//!
//! ```text
//! formula := quant | disj
//! quant   := ('E' | 'A' | 'E>=' INT | 'E<=' INT | 'E=' INT) varlist '.' formula
//! disj    := conj ('|' conj)*
//! conj    := unary ('&' unary)*
//! unary   := '!' unary | '(' formula ')' | quant | atom
//! atom    := REL '(' term (',' term)* ')' | term '=' term | 'true' | 'false'
//! term    := VAR | '@' ELEMENT
//! ```
//!
//! A quantifier in operand position extends as far right as possible.

use thiserror::Error;

use super::ast::{Cmp, Formula, Term};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("at offset {offset}: variable `{var}` is already bound in this scope")]
    Rebinding { offset: usize, var: String },
    #[error("at offset {offset}: unknown comparison `{op}` (expected >=, <= or =)")]
    UnknownComparison { offset: usize, op: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(usize),
    At,
    LParen,
    RParen,
    Comma,
    Dot,
    Bang,
    Amp,
    Pipe,
    Eq,
    Ge,
    Le,
    Lt,
    Gt,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '@' => Tok::At,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '!' => Tok::Bang,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '=' => Tok::Eq,
            '>' | '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 1;
                    if c == '>' {
                        Tok::Ge
                    } else {
                        Tok::Le
                    }
                } else if c == '>' {
                    Tok::Gt
                } else {
                    Tok::Lt
                }
            }
            c if c.is_ascii_digit() => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let digits = &text[start..=i];
                Tok::Int(digits.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("integer `{digits}` is too large"),
                })?)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    bound: Vec<String>,
    free: Vec<String>,
}

enum Quant {
    Exists,
    Forall,
    Count(Cmp, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    /// Recognizes a quantifier prefix without consuming it.
    fn at_quantifier(&self) -> bool {
        match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Ident(q)), Some(next)) if q == "E" || q == "A" => match next {
                Tok::Ident(_) | Tok::Ge | Tok::Le | Tok::Gt | Tok::Lt => true,
                Tok::Eq => matches!(self.peek_at(2), Some(Tok::Int(_))),
                _ => false,
            },
            _ => false,
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        if self.at_quantifier() {
            self.quantified()
        } else {
            self.disjunction()
        }
    }

    fn quantified(&mut self) -> Result<Formula, ParseError> {
        let letter = self.ident("quantifier")?;
        let quant = match self.peek().cloned() {
            Some(op @ (Tok::Ge | Tok::Le | Tok::Eq)) => {
                if letter != "E" {
                    return self.error("counting quantifiers are written `E>=`, `E<=` or `E=`");
                }
                self.pos += 1;
                let Some(Tok::Int(r)) = self.peek().cloned() else {
                    return self.error("expected a threshold after the comparison");
                };
                self.pos += 1;
                let cmp = match op {
                    Tok::Ge => Cmp::AtLeast,
                    Tok::Le => Cmp::AtMost,
                    _ => Cmp::Exactly,
                };
                Quant::Count(cmp, r)
            }
            Some(op @ (Tok::Gt | Tok::Lt)) => {
                return Err(ParseError::UnknownComparison {
                    offset: self.offset(),
                    op: if op == Tok::Gt { ">" } else { "<" }.into(),
                })
            }
            _ if letter == "E" => Quant::Exists,
            _ => Quant::Forall,
        };

        let mut vars: Vec<String> = Vec::new();
        loop {
            let offset = self.offset();
            let v = self.ident("a bound variable")?;
            if self.bound.contains(&v) || vars.contains(&v) {
                return Err(ParseError::Rebinding { offset, var: v });
            }
            vars.push(v);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::Ident(_)) => {}
                _ => break,
            }
        }
        self.expect(Tok::Dot, "`.` after the bound variables")?;

        let depth = self.bound.len();
        self.bound.extend(vars.iter().cloned());
        let body = self.formula();
        self.bound.truncate(depth);
        let body = Box::new(body?);

        Ok(match quant {
            Quant::Exists => Formula::Exists { vars, body },
            Quant::Forall => Formula::Forall { vars, body },
            Quant::Count(cmp, threshold) => Formula::Count {
                cmp,
                threshold,
                vars,
                body,
            },
        })
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(Formula::or(parts))
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ if self.at_quantifier() => self.quantified(),
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        if let Some(Tok::Ident(name)) = self.peek() {
            let name = name.clone();
            match self.peek_at(1) {
                Some(Tok::LParen) => {
                    self.pos += 2;
                    let mut args = vec![self.term()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen, "`)` closing the argument list")?;
                    return Ok(Formula::Atom {
                        relation: name,
                        args,
                    });
                }
                Some(Tok::Eq) => {}
                _ if name == "true" => {
                    self.pos += 1;
                    return Ok(Formula::True);
                }
                _ if name == "false" => {
                    self.pos += 1;
                    return Ok(Formula::False);
                }
                _ => {}
            }
        }
        let lhs = self.term()?;
        self.expect(Tok::Eq, "`=` or a relation application")?;
        let rhs = self.term()?;
        Ok(Formula::Eq(lhs, rhs))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::At) {
            self.pos += 1;
            return Ok(Term::Param(self.ident("an element name after `@`")?));
        }
        let v = self.ident("a variable or `@element`")?;
        if !self.bound.contains(&v) && !self.free.contains(&v) {
            self.free.push(v.clone());
        }
        Ok(Term::Var(v))
    }
}

/// Parses a formula, returning it with its free variables in order of first occurrence.
pub fn parse_formula(text: &str) -> Result<(Formula, Vec<String>), ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
        bound: Vec::new(),
        free: Vec::new(),
    };
    if p.toks.is_empty() {
        return p.error("empty formula");
    }
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok((f, p.free))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Formula {
        parse_formula(text).unwrap().0
    }

    #[test]
    fn conjunction_with_negation() {
        let (f, free) = parse_formula("R(x,y) & !S(x,y)").unwrap();
        assert_eq!(
            f,
            Formula::And(vec![
                Formula::atom("R", &["x", "y"]),
                Formula::not(Formula::atom("S", &["x", "y"]))
            ])
        );
        assert_eq!(free, ["x", "y"]);
    }

    #[test]
    fn counting_quantifier() {
        let (f, free) = parse_formula("E>=2 x. R(x,y)").unwrap();
        assert_eq!(
            f,
            Formula::count(
                Cmp::AtLeast,
                2,
                vec!["x".into()],
                Formula::atom("R", &["x", "y"])
            )
        );
        assert_eq!(free, ["y"]);
        assert!(matches!(
            parse("E<=0 x y. R(x,y)"),
            Formula::Count {
                cmp: Cmp::AtMost,
                threshold: 0,
                ..
            }
        ));
        assert!(matches!(
            parse("E=3 x, y. R(x,y)"),
            Formula::Count {
                cmp: Cmp::Exactly,
                threshold: 3,
                ..
            }
        ));
    }

    #[test]
    fn rebinding_is_rejected() {
        assert!(matches!(
            parse_formula("E x. E x. R(x,x)"),
            Err(ParseError::Rebinding { var, .. }) if var == "x"
        ));
        assert!(matches!(
            parse_formula("E x x. R(x)"),
            Err(ParseError::Rebinding { .. })
        ));
        // sibling scopes may reuse a name
        assert!(parse_formula("(E x. R(x)) & (E x. S(x))").is_ok());
    }

    #[test]
    fn unknown_comparison() {
        assert!(matches!(
            parse_formula("E>2 x. R(x)"),
            Err(ParseError::UnknownComparison { op, .. }) if op == ">"
        ));
        assert!(matches!(
            parse_formula("E<1 x. R(x)"),
            Err(ParseError::UnknownComparison { .. })
        ));
    }

    #[test]
    fn quantifier_letters_as_names() {
        // `E` and `A` are relation names when applied, variables when compared
        assert_eq!(parse("E(x, z)"), Formula::atom("E", &["x", "z"]));
        assert_eq!(parse("E = x"), Formula::Eq(Term::var("E"), Term::var("x")));
        assert!(matches!(parse("E x. E(x, x)"), Formula::Exists { .. }));
        assert!(matches!(
            parse("A x y. R(x,y) | x = y"),
            Formula::Forall { .. }
        ));
    }

    #[test]
    fn precedence_and_parameters() {
        let f = parse("P(x) | Q(x) & !x = @a");
        assert_eq!(
            f,
            Formula::Or(vec![
                Formula::atom("P", &["x"]),
                Formula::And(vec![
                    Formula::atom("Q", &["x"]),
                    Formula::not(Formula::Eq(Term::var("x"), Term::param("a")))
                ])
            ])
        );
        assert_eq!(
            parse("true & false"),
            Formula::And(vec![Formula::True, Formula::False])
        );
        // quantifier operands extend to the right
        assert_eq!(
            parse("P(y) & E x. R(x,y) | Q(x)").to_string(),
            "P(y) & (E x. R(x, y) | Q(x))"
        );
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "",
            "R(",
            "R()",
            "x =",
            "R(x) &",
            "(R(x)",
            "R(x))",
            "E x R(x)",
            "E>= x. R(x)",
            "x # y",
        ] {
            assert!(parse_formula(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn free_variables_skip_bound_occurrences() {
        let (_, free) = parse_formula("R(z, x) & E y. S(y, w, x)").unwrap();
        assert_eq!(free, ["z", "x", "w"]);
    }
}
