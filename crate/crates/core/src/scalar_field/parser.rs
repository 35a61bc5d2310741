//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("-" | "+") unary | power ;
//! power   = primary [ "^" integer ] ;
//! integer = [ "-" | "+" ] digits | "(" integer ")" ;
//! primary = number | "pi" | variable | call | "(" expr ")" ;
//! call    = func "(" expr ")" | "pow" "(" expr "," integer ")" ;
//! func    = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs" ;
//! variable = "x" digits | "y" digits ;      (1-based)
//! ```

use super::{Func, Node};
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
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
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("malformed number `{lit}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

pub(super) struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    n_x: usize,
    n_y: usize,
}

impl Parser {
    pub(super) fn new(text: &str, n_x: usize, n_y: usize) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            at: 0,
            n_x,
            n_y,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let msg = msg.into();
        let msg = if *self.peek() == Tok::End {
            format!("{msg} (end of input)")
        } else {
            msg
        };
        Err(ParseError::Syntax {
            pos: self.pos(),
            msg,
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    pub(super) fn parse(mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::End {
            return self.error("empty expression");
        }
        let node = self.expr()?;
        if *self.peek() != Tok::End {
            return self.error("unexpected trailing input");
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exp = self.integer()?;
        if *self.peek() == Tok::Caret {
            return self.error("chained exponents are ambiguous; add parentheses");
        }
        Ok(Node::Pow(Box::new(base), exp))
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::LParen => {
                let v = self.integer()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            Tok::Minus => Ok(-self.integer()?),
            Tok::Plus => self.integer(),
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => Ok(v as i32),
            Tok::Num(_) => Err(ParseError::Syntax {
                pos,
                msg: "exponent must be an integer; write fractional powers as exp(p*log(u))".into(),
            }),
            _ => Err(ParseError::Syntax {
                pos,
                msg: "expected integer exponent".into(),
            }),
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                self.identifier(name, pos)
            }
            _ => self.error("expected a number, variable, function call or `(`"),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Node, ParseError> {
        if name == "pi" {
            return Ok(Node::Const(std::f64::consts::PI));
        }
        if name == "pow" {
            self.expect(Tok::LParen, "`(` after `pow`")?;
            let base = self.expr()?;
            self.expect(Tok::Comma, "`,` in pow(base, exponent)")?;
            let exp = self.integer()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Node::Pow(Box::new(base), exp));
        }
        if let Some(func) = Func::from_name(&name) {
            self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
            let arg = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Node::Call(func, Box::new(arg)));
        }
        if let Some(node) = self.variable(&name, pos)? {
            return Ok(node);
        }
        Err(ParseError::UnknownIdentifier { name, pos })
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Option<Node>, ParseError> {
        let (kind, digits) = name.split_at(1);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(None);
        }
        let (declared, make): (usize, fn(usize) -> Node) = match kind {
            "x" => (self.n_x, Node::X),
            "y" => (self.n_y, Node::Y),
            _ => return Ok(None),
        };
        let idx: usize = digits.parse().unwrap_or(0);
        if idx == 0 || idx > declared {
            return Err(ParseError::VariableOutOfRange {
                name: name.to_string(),
                pos,
                declared,
            });
        }
        Ok(Some(make(idx - 1)))
    }
}
