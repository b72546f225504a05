//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' exponent)?
//! atom   := number | number 'i' | 'i' | 'x' | 'y' | 'z' | '(' expr ')'
//! exponent := ('-' | '+')? integer | '(' ('-' | '+')? integer ')'
//! ```

use super::{Node, RationalExpr, Var};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integral: bool, imag: bool },
    Var(Var),
    ImagUnit,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let lexeme = &text[i..j];
                let value: f64 = lexeme
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lexeme}`")))?;
                let imag = j < bytes.len() && bytes[j] == b'i' && !is_ident_char(bytes.get(j + 1));
                if imag {
                    j += 1;
                }
                i = j;
                out.push((
                    start,
                    Tok::Num {
                        value,
                        integral: value.fract() == 0.0 && value.is_finite(),
                        imag,
                    },
                ));
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while is_ident_char(bytes.get(j)) {
                    j += 1;
                }
                let ident = &text[i..j];
                let tok = match ident {
                    "x" => Tok::Var(Var::X),
                    "y" => Tok::Var(Var::Y),
                    "z" => Tok::Var(Var::Z),
                    "i" => Tok::ImagUnit,
                    _ => return Err(syntax(start, format!("unknown identifier `{ident}`"))),
                };
                i = j;
                out.push((start, tok));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

fn is_ident_char(b: Option<&u8>) -> bool {
    matches!(b, Some(c) if c.is_ascii_alphanumeric() || *c == b'_')
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expr(&mut self) -> Result<RationalExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = RationalExpr::node(Node::Add(lhs, rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = RationalExpr::node(Node::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<RationalExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = RationalExpr::node(Node::Mul(lhs, rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = RationalExpr::node(Node::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<RationalExpr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(RationalExpr::node(Node::Neg(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RationalExpr> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let n = self.exponent()?;
        if self.peek() == Some(&Tok::Caret) {
            return Err(syntax(self.pos(), "chained `^`; add parentheses"));
        }
        Ok(base.powi(n))
    }

    fn exponent(&mut self) -> Result<i32> {
        let pos = self.pos();
        let paren = self.peek() == Some(&Tok::LParen);
        if paren {
            self.bump();
        }
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -1.0;
                self.bump();
            }
            Some(Tok::Plus) => {
                self.bump();
            }
            _ => {}
        }
        let value = match self.bump() {
            Some(Tok::Num {
                value,
                integral: true,
                imag: false,
            }) => sign * value,
            None => return Err(syntax(self.len, "missing exponent")),
            Some(_) => return Err(Error::NonIntegerExponent { pos }),
        };
        if paren && self.bump() != Some(Tok::RParen) {
            return Err(Error::NonIntegerExponent { pos });
        }
        if value.abs() > i32::MAX as f64 {
            return Err(syntax(pos, "exponent out of range"));
        }
        Ok(value as i32)
    }

    fn atom(&mut self) -> Result<RationalExpr> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num { value, imag, .. }) => Ok(RationalExpr::constant(if imag {
                C64::new(0.0, value)
            } else {
                C64::new(value, 0.0)
            })),
            Some(Tok::ImagUnit) => Ok(RationalExpr::constant(C64::new(0.0, 1.0))),
            Some(Tok::Var(v)) => Ok(RationalExpr::var(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(syntax(self.pos().min(self.len), "expected `)`")),
                }
            }
            Some(t) => Err(syntax(pos, format!("unexpected token {t:?}"))),
            None => Err(syntax(self.len, "unexpected end of input")),
        }
    }
}

pub(super) fn parse(text: &str) -> Result<RationalExpr> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        len: text.len(),
    };
    let e = p.expr()?;
    if p.at < p.toks.len() {
        return Err(syntax(p.pos(), "trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_carry_positions() {
        match parse("x + * y") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match parse("x^1.5") {
            Err(Error::NonIntegerExponent { pos }) => assert_eq!(pos, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x^y"), Err(Error::NonIntegerExponent { .. })));
        assert!(matches!(parse("(x+1"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("sin(x)"), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse(""), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x^2^3"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x y"), Err(Error::Syntax { pos: 2, .. })));
    }

    #[test]
    fn accepts_exponent_forms() {
        let p = [C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        for (text, want) in [("x^3", 8.0), ("x^-1", 0.5), ("x^(-2)", 0.25), ("x^+2", 4.0), ("x^2.0", 4.0)] {
            assert_eq!(parse(text).unwrap().eval(&p).unwrap(), C64::new(want, 0.0), "{text}");
        }
    }

    #[test]
    fn whitespace_and_imaginary_literals() {
        let p = [C64::new(0.0, 0.0); 3];
        let a = parse(" 2.5i + 1e-1 ").unwrap().eval(&p).unwrap();
        assert_eq!(a, C64::new(0.1, 2.5));
        assert_eq!(parse("3*i").unwrap().eval(&p).unwrap(), C64::new(0.0, 3.0));
    }
}
