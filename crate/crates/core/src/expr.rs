//! Coefficient expressions: a small arithmetic language over `x1..xn`.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x' digits | func '(' expr ')' | '(' expr ')'
//! func    := sqrt | exp | log | sin | cos
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`.

use std::fmt;

use thiserror::Error;

use crate::dual::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based coordinate index (`x1` is `Var(0)`).
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0, len: src.len() };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(ParseError {
                offset: t.offset,
                message: format!("unexpected {}", t.kind.describe()),
            }),
        }
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    /// Largest variable index referenced, one-based (`0` if none).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Evaluate at `x`. Variables beyond `x.len()` evaluate to zero; callers
    /// validate with [`Expr::max_var`] first.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match self {
            Expr::Const(c) => T::from_f64(*c),
            Expr::Var(i) => x.get(*i).copied().unwrap_or_else(T::zero),
            Expr::Neg(a) => -a.eval(x),
            Expr::Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tanh => v.tanh(),
                }
            }
            Expr::Binary(op, a, b) => {
                if let (BinOp::Pow, Expr::Const(e)) = (op, b.as_ref()) {
                    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                        return a.eval(x).powi(*e as i32);
                    }
                }
                let (l, r) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => l.powf(r),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    /// Prints with the minimal parentheses that re-parse to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                if *op == BinOp::Pow {
                    // right-assoc; the exponent parses as a unary
                    wrap(f, a, a.precedence() <= p)?;
                    write!(f, "^")?;
                    wrap(f, b, b.precedence() < 3)
                } else {
                    wrap(f, a, a.precedence() < p)?;
                    write!(f, " {sym} ")?;
                    wrap(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Var(usize),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Var(i) => format!("variable x{}", i + 1),
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Op(c) => format!("'{c}'"),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token { kind: TokenKind::Num(v), offset: start });
        } else if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &src[start..i];
            let kind = match text.strip_prefix('x') {
                Some(d) if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) => {
                    let k: usize = d.parse().map_err(|_| ParseError {
                        offset: start,
                        message: format!("bad variable '{text}'"),
                    })?;
                    if k == 0 {
                        return Err(ParseError {
                            offset: start,
                            message: "variables are numbered from x1".into(),
                        });
                    }
                    TokenKind::Var(k - 1)
                }
                _ => TokenKind::Ident(text.to_string()),
            };
            out.push(Token { kind, offset: start });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokenKind::Op(c),
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                _ => {
                    return Err(ParseError {
                        offset: start,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            };
            i += c.len_utf8();
            out.push(Token { kind, offset: start });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token { kind: TokenKind::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eof_error(&self, what: &str) -> ParseError {
        ParseError { offset: self.len, message: format!("unexpected end of input, expected {what}") }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next().ok_or_else(|| self.eof_error("an operand"))?;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Const(v)),
            TokenKind::Var(i) => Ok(Expr::Var(i)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect_rparen(tok.offset)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                let func = Func::from_name(&name).ok_or_else(|| ParseError {
                    offset: tok.offset,
                    message: format!("unknown identifier '{name}'"),
                })?;
                match self.next() {
                    Some(Token { kind: TokenKind::LParen, offset }) => {
                        let arg = self.expr()?;
                        self.expect_rparen(offset)?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    Some(t) => Err(ParseError {
                        offset: t.offset,
                        message: format!("expected '(' after {name}"),
                    }),
                    None => Err(self.eof_error("'('")),
                }
            }
            other => Err(ParseError {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), ParseError> {
        match self.next() {
            Some(Token { kind: TokenKind::RParen, .. }) => Ok(()),
            Some(t) => Err(ParseError {
                offset: t.offset,
                message: format!("expected ')' to close '(' at offset {open}"),
            }),
            None => Err(ParseError {
                offset: self.len,
                message: format!("unclosed '(' at offset {open}"),
            }),
        }
    }
}
