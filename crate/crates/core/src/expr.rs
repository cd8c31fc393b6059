//! Coefficient expressions such as `0.2 + cos(2*pi*x1)`.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = ("+" | "-") , unary | primary ;
//! primary = number | "pi" | "x1" | "x2"
//!         | func , "(" , expr , ")"
//!         | "(" , expr , ")" ;
//! func    = "sin" | "cos" | "exp" | "abs" ;
//! number  = digits , [ "." , [ digits ] ] , [ exponent ]
//!         | "." , digits , [ exponent ] ;
//! exponent = ("e" | "E") , [ "+" | "-" ] , digits ;
//! ```
//!
//! Whitespace is ignored between tokens. Error positions are 1-based
//! character columns.

use crate::error::{Error, Result};

const MAX_LEN: usize = 4096;
const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X1,
    X2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    End,
}

fn perr(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, pos));
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let mantissa: String = chars[start..i].iter().collect();
            if mantissa == "." {
                return Err(perr(pos, "expected digits"));
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                let digits_start = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j == digits_start {
                    return Err(perr(j + 1, "malformed exponent"));
                }
                i = j;
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| perr(pos, format!("invalid number '{text}'")))?;
            if !v.is_finite() {
                return Err(perr(pos, format!("number out of range '{text}'")));
            }
            out.push((Tok::Num(v), pos));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else {
            return Err(perr(pos, format!("unexpected character '{c}'")));
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    depth: usize,
}

impl Parser {
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

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(perr(self.pos(), "expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Minus => {
                self.enter()?;
                self.bump();
                let e = Expr::Neg(Box::new(self.unary()?));
                self.depth -= 1;
                Ok(e)
            }
            Tok::Plus => {
                self.enter()?;
                self.bump();
                let e = self.unary()?;
                self.depth -= 1;
                Ok(e)
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "x1" => Ok(Expr::X1),
                "x2" => Ok(Expr::X2),
                "sin" | "cos" | "exp" | "abs" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        _ => Func::Abs,
                    };
                    if *self.peek() != Tok::LParen {
                        return Err(perr(self.pos(), format!("expected '(' after {name}")));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(f, Box::new(arg)))
                }
                _ => Err(perr(pos, format!("unknown identifier '{name}'"))),
            },
            Tok::End => Err(perr(pos, "unexpected end of input")),
            t => Err(perr(pos, format!("unexpected token {}", describe(&t)))),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(perr(self.pos(), "expected ')'"))
        }
    }
}

fn describe(t: &Tok) -> &'static str {
    match t {
        Tok::Plus => "'+'",
        Tok::Minus => "'-'",
        Tok::Star => "'*'",
        Tok::Slash => "'/'",
        Tok::LParen => "'('",
        Tok::RParen => "')'",
        Tok::Num(_) => "number",
        Tok::Ident(_) => "identifier",
        Tok::End => "end of input",
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        if src.chars().count() > MAX_LEN {
            return Err(perr(MAX_LEN + 1, "expression too long"));
        }
        let toks = lex(src)?;
        let mut p = Parser {
            toks,
            at: 0,
            depth: 0,
        };
        let e = p.expr()?;
        if *p.peek() != Tok::End {
            return Err(perr(p.pos(), "unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn uses_x2(&self) -> bool {
        match self {
            Expr::X2 => true,
            Expr::Num(_) | Expr::X1 => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_x2(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_x2() || b.uses_x2()
            }
        }
    }

    /// Evaluate at a point. Division by an exact zero is an error.
    pub fn eval(&self, x1: f64, x2: f64) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::X1 => x1,
            Expr::X2 => x2,
            Expr::Neg(a) => -a.eval(x1, x2)?,
            Expr::Add(a, b) => a.eval(x1, x2)? + b.eval(x1, x2)?,
            Expr::Sub(a, b) => a.eval(x1, x2)? - b.eval(x1, x2)?,
            Expr::Mul(a, b) => a.eval(x1, x2)? * b.eval(x1, x2)?,
            Expr::Div(a, b) => {
                let num = a.eval(x1, x2)?;
                let den = b.eval(x1, x2)?;
                if den == 0.0 {
                    return Err(Error::DivisionByZero { x1, x2 });
                }
                num / den
            }
            Expr::Call(f, a) => {
                let v = a.eval(x1, x2)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Abs => v.abs(),
                }
            }
        };
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("expression value at ({x1}, {x2})")));
        }
        Ok(v)
    }
}

/// A parsed coefficient together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub source: String,
    pub expr: Expr,
}

impl Coefficient {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Coefficient {
            source: src.to_string(),
            expr: Expr::parse(src)?,
        })
    }
}
