//! A small arithmetic expression language.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := expr ('+' | '-') expr | expr ('*' | '/') expr | '-' expr | expr '^' expr | atom
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2 == -4`.
//! There is no implicit multiplication. Recognised functions are `exp`, `ln`,
//! `sin`, `cos`, `tan`, `sqrt`, `abs` and the two-argument `pow`; `pi` and `e`
//! are constants. Every other identifier is a free variable.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {}", expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<String> },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("domain error in `{op}` at argument {arg}")]
    Domain { op: String, arg: f64 },
}

impl ExprError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExprError::Syntax { .. } => "SyntaxError",
            ExprError::UnknownIdentifier(_) => "UnknownIdentifier",
            ExprError::UnboundVariable(_) => "UnboundVariable",
            ExprError::Domain { .. } => "DomainError",
        }
    }

    fn syntax(offset: usize, expected: &[&str]) -> Self {
        ExprError::Syntax {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn domain(op: &str, arg: f64) -> Self {
        ExprError::Domain {
            op: op.to_string(),
            arg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    /// (left, right) binding power for the Pratt loop.
    fn binding_power(self) -> (u8, u8) {
        match self {
            BinOp::Add | BinOp::Sub => (1, 2),
            BinOp::Mul | BinOp::Div => (3, 4),
            BinOp::Pow => (7, 6),
        }
    }

    fn print_precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const PREFIX_MINUS_BP: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Abs,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Abstract syntax tree. Literals produced by the parser are finite and non-negative;
/// a leading minus is always a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parse an expression; every non-reserved identifier becomes a free variable.
pub fn parse(source: &str) -> Result<Expr, ExprError> {
    Parser::new(source)?.parse_all()
}

/// Parse an expression whose free variables must belong to `allowed`.
pub fn parse_with_vars(source: &str, allowed: &[&str]) -> Result<Expr, ExprError> {
    let e = parse(source)?;
    if let Some(bad) = e.free_vars().into_iter().find(|v| !allowed.contains(&v.as_str())) {
        return Err(ExprError::UnknownIdentifier(bad));
    }
    Ok(e)
}

/// Evaluate `e` with variables looked up in `env`.
pub fn eval(e: &Expr, env: &HashMap<String, f64>) -> Result<f64, ExprError> {
    e.eval_with(&|name| env.get(name).copied())
}

impl Expr {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(x) => x.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Expr::Num(_) | Expr::Const(_) => {}
        }
    }

    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        match self {
            Expr::Num(x) => Ok(*x),
            Expr::Const(c) => Ok(c.value()),
            Expr::Var(v) => lookup(v).ok_or_else(|| ExprError::UnboundVariable(v.clone())),
            Expr::Neg(x) => Ok(-x.eval_with(lookup)?),
            Expr::Binary(op, l, r) => apply_binary(*op, l.eval_with(lookup)?, r.eval_with(lookup)?),
            Expr::Call(f, args) => {
                let x = args[0].eval_with(lookup)?;
                let y = match args.get(1) {
                    Some(a) => a.eval_with(lookup)?,
                    None => 0.0,
                };
                apply_func(*f, x, y)
            }
        }
    }

    /// Resolve variable names to positional slots. Unknown names are rejected.
    pub fn bind(&self, vars: &[&str]) -> Result<BoundExpr, ExprError> {
        Ok(BoundExpr {
            node: Arc::new(self.bind_node(vars)?),
            source: Arc::from(self.to_string()),
            arity: vars.len(),
        })
    }

    fn bind_node(&self, vars: &[&str]) -> Result<Node, ExprError> {
        Ok(match self {
            Expr::Num(x) => Node::Num(*x),
            Expr::Const(c) => Node::Num(c.value()),
            Expr::Var(v) => Node::Slot(
                vars.iter()
                    .position(|n| n == v)
                    .ok_or_else(|| ExprError::UnknownIdentifier(v.clone()))?,
            ),
            Expr::Neg(x) => Node::Neg(Box::new(x.bind_node(vars)?)),
            Expr::Binary(op, l, r) => {
                Node::Binary(*op, Box::new(l.bind_node(vars)?), Box::new(r.bind_node(vars)?))
            }
            Expr::Call(f, args) => Node::Call(
                *f,
                args.iter()
                    .map(|a| a.bind_node(vars))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        })
    }

    /// Every binary and unary node wrapped in parentheses.
    pub fn to_full_string(&self) -> String {
        match self {
            Expr::Num(x) => format!("{x:?}"),
            Expr::Const(c) => c.name().to_string(),
            Expr::Var(v) => v.clone(),
            Expr::Neg(x) => format!("(-{})", x.to_full_string()),
            Expr::Binary(op, l, r) => {
                format!("({} {} {})", l.to_full_string(), op.symbol(), r.to_full_string())
            }
            Expr::Call(f, args) => {
                let args: Vec<_> = args.iter().map(|a| a.to_full_string()).collect();
                format!("{}({})", f.name(), args.join(", "))
            }
        }
    }

    fn print_precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.print_precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    /// Minimal-parenthesis rendering that re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(x) => {
                f.write_str("-")?;
                wrapped(f, x, x.print_precedence() <= 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.print_precedence();
                let (lp, rp) = if *op == BinOp::Pow {
                    (l.print_precedence() <= p, r.print_precedence() < p)
                } else {
                    (l.print_precedence() < p, r.print_precedence() <= p)
                };
                wrapped(f, l, lp)?;
                write!(f, " {} ", op.symbol())?;
                wrapped(f, r, rp)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn checked(op: &str, arg: f64, value: f64) -> Result<f64, ExprError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ExprError::domain(op, arg))
    }
}

fn power(op: &str, base: f64, exponent: f64) -> Result<f64, ExprError> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(ExprError::domain(op, base));
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(ExprError::domain(op, base));
    }
    checked(op, base, base.powf(exponent))
}

fn apply_binary(op: BinOp, x: f64, y: f64) -> Result<f64, ExprError> {
    match op {
        BinOp::Add => checked("+", x, x + y),
        BinOp::Sub => checked("-", x, x - y),
        BinOp::Mul => checked("*", x, x * y),
        BinOp::Div => {
            if y == 0.0 {
                Err(ExprError::domain("/", y))
            } else {
                checked("/", y, x / y)
            }
        }
        BinOp::Pow => power("^", x, y),
    }
}

fn apply_func(f: Func, x: f64, y: f64) -> Result<f64, ExprError> {
    match f {
        Func::Exp => checked("exp", x, x.exp()),
        Func::Ln => {
            if x <= 0.0 {
                Err(ExprError::domain("ln", x))
            } else {
                Ok(x.ln())
            }
        }
        Func::Sin => checked("sin", x, x.sin()),
        Func::Cos => checked("cos", x, x.cos()),
        Func::Tan => checked("tan", x, x.tan()),
        Func::Sqrt => {
            if x < 0.0 {
                Err(ExprError::domain("sqrt", x))
            } else {
                Ok(x.sqrt())
            }
        }
        Func::Abs => Ok(x.abs()),
        Func::Pow => power("pow", x, y),
    }
}

#[derive(Debug)]
enum Node {
    Num(f64),
    Slot(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, args: &[f64]) -> Result<f64, ExprError> {
        match self {
            Node::Num(x) => Ok(*x),
            Node::Slot(i) => Ok(args[*i]),
            Node::Neg(x) => Ok(-x.eval(args)?),
            Node::Binary(op, l, r) => apply_binary(*op, l.eval(args)?, r.eval(args)?),
            Node::Call(f, a) => {
                let x = a[0].eval(args)?;
                let y = match a.get(1) {
                    Some(n) => n.eval(args)?,
                    None => 0.0,
                };
                apply_func(*f, x, y)
            }
        }
    }
}

/// An expression with variables resolved to positions; cheap to clone and
/// safe to evaluate concurrently.
#[derive(Debug, Clone)]
pub struct BoundExpr {
    node: Arc<Node>,
    source: Arc<str>,
    arity: usize,
}

impl BoundExpr {
    /// Parse `source` and bind it to the given variable names in order.
    pub fn compile(source: &str, vars: &[&str]) -> Result<Self, ExprError> {
        parse_with_vars(source, vars)?.bind(vars)
    }

    /// Evaluate with `args[i]` bound to the i-th variable name.
    pub fn eval(&self, args: &[f64]) -> Result<f64, ExprError> {
        assert_eq!(args.len(), self.arity, "argument count mismatch");
        self.node.eval(args)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

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
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ExprError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            end: src.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError::syntax(self.offset(), &[name]))
        }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.parse_expr(0)?;
        if self.pos < self.toks.len() {
            return Err(ExprError::syntax(self.offset(), &["operator", "end of input"]));
        }
        Ok(e)
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::Caret) => BinOp::Pow,
                _ => break,
            };
            let (lbp, rbp) = op.binding_power();
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.parse_expr(rbp)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(x)) => Ok(Expr::Num(x)),
            Some(Tok::Minus) => Ok(Expr::Neg(Box::new(self.parse_expr(PREFIX_MINUS_BP)?))),
            Some(Tok::LParen) => {
                let e = self.parse_expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func =
                        Func::from_name(&name).ok_or(ExprError::UnknownIdentifier(name))?;
                    self.pos += 1;
                    let mut args = vec![self.parse_expr(0)?];
                    while args.len() < func.arity() {
                        self.expect(Tok::Comma, "`,`")?;
                        args.push(self.parse_expr(0)?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Call(func, args))
                } else if Func::from_name(&name).is_some() {
                    Err(ExprError::syntax(self.offset(), &["`(`"]))
                } else {
                    Ok(match name.as_str() {
                        "pi" => Expr::Const(Constant::Pi),
                        "e" => Expr::Const(Constant::E),
                        _ => Expr::Var(name),
                    })
                }
            }
            _ => Err(ExprError::syntax(at, &["expression"])),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // exponent only when followed by digits, so `2e` stays "2" then `e`
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
            let value: f64 = text
                .parse()
                .map_err(|_| ExprError::syntax(start, &["number"]))?;
            out.push((Tok::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        return Err(ExprError::syntax(start, &["expression"]));
    }
    Ok(out)
}
