//! Small arithmetic expressions over `x`, `y` and `t` for coefficients and
//! manufactured fields.

use std::fmt;

use frade_core::frac_calc::gamma_fn;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
    Gamma,
    /// Positive part `max(v, 0)`.
    Pos,
}

impl Func {
    const NAMES: [(&'static str, Func); 12] = [
        ("sin", Func::Sin),
        ("cos", Func::Cos),
        ("tan", Func::Tan),
        ("exp", Func::Exp),
        ("ln", Func::Ln),
        ("sqrt", Func::Sqrt),
        ("abs", Func::Abs),
        ("sinh", Func::Sinh),
        ("cosh", Func::Cosh),
        ("tanh", Func::Tanh),
        ("gamma", Func::Gamma),
        ("pos", Func::Pos),
    ];

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Gamma => gamma_fn(v).unwrap_or(f64::NAN),
            Func::Pos => v.max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Parsed expression; evaluation is a tree walk.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0, len: text.len() };
        let root = p.sum()?;
        if let Some((col, tok)) = p.tokens.get(p.pos) {
            return Err(ExprError { column: *col, message: format!("unexpected {tok}") });
        }
        Ok(Self { root, source: text.trim().to_string() })
    }

    pub fn constant(v: f64) -> Self {
        Self { root: Node::Num(v), source: v.to_string() }
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        eval(&self.root, [x, y, t])
    }

    pub fn uses(&self, v: Var) -> bool {
        uses(&self.root, v)
    }

    /// Value when the expression mentions no variable.
    pub fn as_constant(&self) -> Option<f64> {
        (![Var::X, Var::Y, Var::T].iter().any(|&v| self.uses(v))).then(|| self.eval(0.0, 0.0, 0.0))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(n: &Node, v: [f64; 3]) -> f64 {
    match n {
        Node::Num(c) => *c,
        Node::Var(Var::X) => v[0],
        Node::Var(Var::Y) => v[1],
        Node::Var(Var::T) => v[2],
        Node::Neg(a) => -eval(a, v),
        Node::Call(f, a) => f.apply(eval(a, v)),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, v), eval(b, v));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => a.powf(b),
            }
        }
    }
}

fn uses(n: &Node, var: Var) -> bool {
    match n {
        Node::Num(_) => false,
        Node::Var(v) => *v == var,
        Node::Neg(a) | Node::Call(_, a) => uses(a, var),
        Node::Bin(_, a, b) => uses(a, var) || uses(b, var),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Op(c) => write!(f, "'{c}'"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| ExprError { column: col, message: format!("bad number '{s}'") })?;
            out.push((col, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((col, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((col, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ExprError { column: col, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((_, Tok::Op(c))) => Some(*c),
            _ => None,
        }
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len + 1, |(c, _)| *c)
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError { column: self.column(), message: message.into() }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // right associative, binds tighter than unary minus on its left
    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some((_, tok)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.err("unexpected end of expression"));
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let inner = self.sum()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Op(c) => Err(self.err(format!("unexpected '{c}'"))),
            Tok::Ident(name) => {
                let col = self.column();
                self.pos += 1;
                match name.as_str() {
                    "x" => return Ok(Node::Var(Var::X)),
                    "y" => return Ok(Node::Var(Var::Y)),
                    "t" => return Ok(Node::Var(Var::T)),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "e" => return Ok(Node::Num(std::f64::consts::E)),
                    _ => {}
                }
                let Some(&(_, f)) = Func::NAMES.iter().find(|(n, _)| *n == name) else {
                    return Err(ExprError { column: col, message: format!("unknown name '{name}'") });
                };
                self.expect('(')?;
                let arg = self.sum()?;
                self.expect(')')?;
                Ok(Node::Call(f, Box::new(arg)))
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }
}
