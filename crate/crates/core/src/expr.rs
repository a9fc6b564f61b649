//! Scalar expressions over named variables.
//!
//! Text is parsed into a flat postfix tape. The same tape is evaluated either
//! for its value alone or, with second-order forward-mode differentiation, for
//! its value, gradient and Hessian. Every evaluation order shares the value
//! arithmetic, so `eval(e, p)` and `eval_taylor2(e, p).value` agree bit for bit.
//!
//! Grammar (standard precedence, `^` binds tighter than unary minus):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' int)?
//! int     := '-'? digits | '(' '-'? digits ')'
//! primary := number | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x' digits | 'x'            (bare 'x' only when n_vars == 1)
//! func    := exp | log | sin | cos
//! ```

use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

// Tape and temporaries live on the stack for the small problems this crate
// targets; larger ones spill to the heap.
type Scratch = SmallVec<[f64; 256]>;
type Slot = SmallVec<[f64; 16]>;

/// Largest exponent magnitude accepted by `^`.
pub const MAX_POWER: i32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Const(f64),
    /// Zero-based variable index.
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, i32),
    Call(Func, usize),
}

/// A parsed, immutable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    nodes: Vec<Node>,
    n_vars: usize,
    source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable `{name}` at position {pos} is out of range 1..={n_vars}")]
    VariableOutOfRange { pos: usize, name: String, n_vars: usize },
    #[error("exponent at position {pos} must be an integer constant with magnitude <= {MAX_POWER}")]
    BadExponent { pos: usize },
    #[error("expression must have at least one variable slot")]
    NoVariables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a non-positive number")]
    LogNonPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(#[from] DomainError),
    #[error("overflow to a non-finite value")]
    Overflow,
    #[error("point has dimension {got}, expression expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Value, gradient and Hessian of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor2 {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `n × n`, exactly symmetric.
    pub hessian: Vec<f64>,
    n: usize,
}

impl Taylor2 {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.n + j]
    }
}

/// Derivative information up to a requested order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    /// Empty when order 0 was requested.
    pub gradient: Vec<f64>,
    /// Empty unless order 2 was requested; row-major `n × n`.
    pub hessian: Vec<f64>,
}

impl Expression {
    pub fn parse(text: &str, n_vars: usize) -> Result<Self, ParseError> {
        if n_vars == 0 {
            return Err(ParseError::NoVariables);
        }
        if text.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            n_vars,
            nodes: Vec::new(),
        };
        p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.syntax("unexpected trailing input"));
        }
        Ok(Expression {
            nodes: p.nodes,
            n_vars,
            source: text.to_string(),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// The text this expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut buf = Scratch::new();
        Ok(self.run(point, 0, &mut buf)?.0[0])
    }

    pub fn eval_taylor2(&self, point: &[f64]) -> Result<Taylor2, EvalError> {
        let jet = self.eval_order(point, 2)?;
        Ok(Taylor2 {
            value: jet.value,
            gradient: jet.gradient,
            hessian: jet.hessian,
            n: self.n_vars,
        })
    }

    /// Evaluates value and derivatives up to `order` (0, 1 or 2).
    pub fn eval_order(&self, point: &[f64], order: u8) -> Result<Jet, EvalError> {
        let mut buf = Scratch::new();
        let (root, ng, nh) = self.run(point, order, &mut buf)?;
        Ok(Jet {
            value: root[0],
            gradient: root[1..1 + ng].to_vec(),
            hessian: root[1 + ng..1 + ng + nh].to_vec(),
        })
    }

    /// Infinity norm of the gradient, without building a [`Jet`].
    pub fn gradient_inf_norm(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut buf = Scratch::new();
        let (root, ng, _) = self.run(point, 1, &mut buf)?;
        Ok(root[1..1 + ng].iter().fold(0.0_f64, |r, g| r.max(g.abs())))
    }

    /// Runs the tape and returns the root slot with its gradient and Hessian
    /// widths.
    fn run<'a>(&self, point: &[f64], order: u8, buf: &'a mut Scratch) -> Result<(&'a [f64], usize, usize), EvalError> {
        let n = self.n_vars;
        if point.len() != n {
            return Err(EvalError::DimensionMismatch {
                expected: n,
                got: point.len(),
            });
        }
        let order = order.min(2);
        let ng = if order >= 1 { n } else { 0 };
        let nh = if order >= 2 { n * n } else { 0 };
        let stride = 1 + ng + nh;
        buf.clear();
        buf.resize(stride * self.nodes.len(), 0.0);

        for (k, node) in self.nodes.iter().enumerate() {
            let (done, rest) = buf.split_at_mut(k * stride);
            let out = &mut rest[..stride];
            let slot = |i: usize| &done[i * stride..(i + 1) * stride];
            match *node {
                Node::Const(c) => out[0] = c,
                Node::Var(i) => {
                    out[0] = point[i];
                    if ng > 0 {
                        out[1 + i] = 1.0;
                    }
                }
                Node::Neg(a) => {
                    for (o, v) in out.iter_mut().zip(slot(a)) {
                        *o = -*v;
                    }
                }
                Node::Add(a, b) => {
                    for ((o, u), v) in out.iter_mut().zip(slot(a)).zip(slot(b)) {
                        *o = u + v;
                    }
                }
                Node::Sub(a, b) => {
                    for ((o, u), v) in out.iter_mut().zip(slot(a)).zip(slot(b)) {
                        *o = u - v;
                    }
                }
                Node::Mul(a, b) => mul_into(out, slot(a), slot(b), ng, nh > 0),
                Node::Div(a, b) => div_into(out, slot(a), slot(b), ng, nh > 0)?,
                Node::Pow(a, k) => pow_into(out, slot(a), k, ng, nh > 0)?,
                Node::Call(f, a) => call_into(out, slot(a), f, ng, nh > 0)?,
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(EvalError::Overflow);
            }
        }

        let root = &buf[(self.nodes.len() - 1) * stride..];
        Ok((root, ng, nh))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

// Jet slot layout: [value, grad[0..ng], hess[0..n*n]] with n == ng when a
// Hessian is present.

fn hess_sym(out: &mut [f64], n: usize, mut entry: impl FnMut(usize, usize) -> f64) {
    let h = &mut out[1 + n..1 + n + n * n];
    for i in 0..n {
        for j in i..n {
            let v = entry(i, j);
            h[i * n + j] = v;
            h[j * n + i] = v;
        }
    }
}

fn mul_into(out: &mut [f64], a: &[f64], b: &[f64], n: usize, hess: bool) {
    let (av, bv) = (a[0], b[0]);
    out[0] = av * bv;
    for i in 0..n {
        out[1 + i] = av * b[1 + i] + bv * a[1 + i];
    }
    if hess {
        let (ag, bg) = (&a[1..1 + n], &b[1..1 + n]);
        let (ah, bh) = (&a[1 + n..], &b[1 + n..]);
        hess_sym(out, n, |i, j| {
            av * bh[i * n + j] + bv * ah[i * n + j] + (ag[i] * bg[j] + bg[i] * ag[j])
        });
    }
}

fn div_into(out: &mut [f64], a: &[f64], b: &[f64], n: usize, hess: bool) -> Result<(), EvalError> {
    let bv = b[0];
    if bv == 0.0 {
        return Err(DomainError::DivisionByZero.into());
    }
    let q = a[0] / bv;
    out[0] = q;
    for i in 0..n {
        out[1 + i] = (a[1 + i] - q * b[1 + i]) / bv;
    }
    if hess {
        let qg: Slot = SmallVec::from_slice(&out[1..1 + n]);
        let bg = &b[1..1 + n];
        let (ah, bh) = (&a[1 + n..], &b[1 + n..]);
        hess_sym(out, n, |i, j| {
            (ah[i * n + j] - q * bh[i * n + j] - (qg[i] * bg[j] + bg[i] * qg[j])) / bv
        });
    }
    Ok(())
}

fn pow_into(out: &mut [f64], a: &[f64], k: i32, n: usize, hess: bool) -> Result<(), EvalError> {
    let stride = out.len();
    if k == 0 {
        out.fill(0.0);
        out[0] = 1.0;
        return Ok(());
    }
    let mut acc: Slot = SmallVec::from_slice(a);
    let mut tmp: Slot = SmallVec::from_elem(0.0, stride);
    for _ in 1..k.unsigned_abs() {
        mul_into(&mut tmp, &acc, a, n, hess);
        std::mem::swap(&mut acc, &mut tmp);
    }
    if k > 0 {
        out.copy_from_slice(&acc);
        Ok(())
    } else {
        let mut one: Slot = SmallVec::from_elem(0.0, stride);
        one[0] = 1.0;
        div_into(out, &one, &acc, n, hess)
    }
}

fn call_into(out: &mut [f64], a: &[f64], f: Func, n: usize, hess: bool) -> Result<(), EvalError> {
    let x = a[0];
    // (f(x), f'(x), f''(x)) of the outer function.
    let (v, d1, d2) = match f {
        Func::Exp => {
            let e = x.exp();
            (e, e, e)
        }
        Func::Log => {
            if x <= 0.0 {
                return Err(DomainError::LogNonPositive.into());
            }
            let r = 1.0 / x;
            (x.ln(), r, -r * r)
        }
        Func::Sin => {
            let (s, c) = x.sin_cos();
            (s, c, -s)
        }
        Func::Cos => {
            let (s, c) = x.sin_cos();
            (c, -s, -c)
        }
    };
    out[0] = v;
    for i in 0..n {
        out[1 + i] = d1 * a[1 + i];
    }
    if hess {
        let ag = &a[1..1 + n];
        let ah = &a[1 + n..];
        hess_sym(out, n, |i, j| d1 * ah[i * n + j] + d2 * (ag[i] * ag[j]));
    }
    Ok(())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n_vars: usize,
    nodes: Vec<Node>,
}

impl Parser<'_> {
    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = self.push(Node::Add(lhs, rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = self.push(Node::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = self.push(Node::Mul(lhs, rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = self.push(Node::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<usize, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let a = self.unary()?;
            return Ok(self.push(Node::Neg(a)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<usize, ParseError> {
        let base = self.primary()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let start = {
            self.skip_ws();
            self.pos
        };
        let k = self.int_exponent().ok_or(ParseError::BadExponent { pos: start })?;
        if k.abs() > MAX_POWER {
            return Err(ParseError::BadExponent { pos: start });
        }
        Ok(self.push(Node::Pow(base, k)))
    }

    fn int_exponent(&mut self) -> Option<i32> {
        let paren = self.peek() == Some(b'(');
        if paren {
            self.pos += 1;
        }
        let neg = self.peek() == Some(b'-');
        if neg {
            self.pos += 1;
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        // Reject `2.5` or `2e1`.
        if matches!(self.src.get(self.pos), Some(b'.' | b'e' | b'E')) {
            return None;
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).ok()?;
        let mag: i32 = digits.parse().ok()?;
        if paren {
            if self.peek() != Some(b')') {
                return None;
            }
            self.pos += 1;
        }
        Some(if neg { -mag } else { mag })
    }

    fn primary(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii");
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: format!("malformed number `{text}`"),
        })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                pos: start,
                msg: format!("number `{text}` is not finite"),
            });
        }
        self.pos = i;
        Ok(self.push(Node::Const(value)))
    }

    fn identifier(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let func = match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        };
        if let Some(f) = func {
            if self.peek() != Some(b'(') {
                return Err(self.syntax(&format!("expected `(` after `{}`", f.name())));
            }
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(self.push(Node::Call(f, arg)));
        }
        if name == "x" {
            if self.n_vars == 1 {
                return Ok(self.push(Node::Var(0)));
            }
            return Err(ParseError::UnknownIdentifier {
                pos: start,
                name: name.to_string(),
            });
        }
        if let Some(idx) = name.strip_prefix('x').filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())) {
            let i: usize = idx.parse().unwrap_or(usize::MAX);
            if i == 0 || i > self.n_vars {
                return Err(ParseError::VariableOutOfRange {
                    pos: start,
                    name: name.to_string(),
                    n_vars: self.n_vars,
                });
            }
            return Ok(self.push(Node::Var(i - 1)));
        }
        Err(ParseError::UnknownIdentifier {
            pos: start,
            name: name.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn parses_and_evaluates_paper_functions() {
        let e = Expression::parse("x*exp(x)-1", 1).unwrap();
        // 0.1*exp(0.1) - 1, recomputed at 50 digits.
        assert!(close(e.eval(&[0.1]).unwrap(), -0.889482908192435, 1e-15));

        let q = Expression::parse("x^4+x^3-x^2-1", 1).unwrap();
        assert_eq!(q.eval(&[0.0]).unwrap(), -1.0);

        let r = Expression::parse("100*(x2-x1^2)^2+(1-x1)^2", 2).unwrap();
        assert_eq!(r.eval(&[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let e = Expression::parse("7", 2).unwrap();
        let t = e.eval_taylor2(&[0.3, -4.0]).unwrap();
        assert_eq!(t.value, 7.0);
        assert_eq!(t.gradient, vec![0.0, 0.0]);
        assert_eq!(t.hessian, vec![0.0; 4]);

        let c = Expression::parse("5", 1).unwrap().eval_taylor2(&[2.5]).unwrap();
        assert_eq!((c.value, c.gradient[0], c.hess(0, 0)), (5.0, 0.0, 0.0));
    }

    #[test]
    fn quartic_derivatives() {
        let e = Expression::parse("x^4+x^3-x^2-1", 1).unwrap();
        let t = e.eval_taylor2(&[0.1]).unwrap();
        assert!(close(t.value, -1.0089, 1e-14));
        assert!(close(t.gradient[0], -0.166, 1e-14));
        assert!(close(t.hess(0, 0), -1.28, 1e-14));
    }

    #[test]
    fn square_minus_three_derivatives() {
        let e = Expression::parse("x^2-3", 1).unwrap();
        let t = e.eval_taylor2(&[3.0]).unwrap();
        assert_eq!((t.value, t.gradient[0], t.hess(0, 0)), (6.0, 6.0, 2.0));
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expression::parse("-x^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = Expression::parse("2-3-4", 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), -5.0);
        let e = Expression::parse("8/4/2", 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 1.0);
        let e = Expression::parse("1+2*3^2", 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 19.0);
        let e = Expression::parse("x^-2 + x^(-1)", 1).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 0.75);
        let e = Expression::parse("1.5e1 * x", 1).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 30.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Expression::parse("", 1), Err(ParseError::Empty)));
        assert!(matches!(
            Expression::parse("x +* 2", 1),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            Expression::parse("y+1", 1),
            Err(ParseError::UnknownIdentifier { pos: 0, .. })
        ));
        assert!(matches!(
            Expression::parse("x1+x3", 2),
            Err(ParseError::VariableOutOfRange { pos: 3, .. })
        ));
        assert!(matches!(Expression::parse("x", 2), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(Expression::parse("x^2.5", 1), Err(ParseError::BadExponent { pos: 2 })));
        assert!(matches!(Expression::parse("x^x", 1), Err(ParseError::BadExponent { .. })));
        assert!(matches!(Expression::parse("x^17", 1), Err(ParseError::BadExponent { .. })));
        assert!(matches!(Expression::parse("(x+1", 1), Err(ParseError::Syntax { .. })));
        assert!(matches!(Expression::parse("exp x", 1), Err(ParseError::Syntax { .. })));
        assert!(matches!(Expression::parse("x 2", 1), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn domain_errors_are_distinct_from_overflow() {
        let log = Expression::parse("log(x)", 1).unwrap();
        assert_eq!(log.eval(&[0.0]), Err(EvalError::Domain(DomainError::LogNonPositive)));
        assert_eq!(log.eval(&[-1.0]), Err(EvalError::Domain(DomainError::LogNonPositive)));
        let div = Expression::parse("1/x", 1).unwrap();
        assert_eq!(div.eval(&[0.0]), Err(EvalError::Domain(DomainError::DivisionByZero)));
        let inv = Expression::parse("x^-1", 1).unwrap();
        assert_eq!(inv.eval_taylor2(&[0.0]), Err(EvalError::Domain(DomainError::DivisionByZero)));
        let big = Expression::parse("exp(exp(x))", 1).unwrap();
        assert_eq!(big.eval(&[10.0]), Err(EvalError::Overflow));
        assert_eq!(
            big.eval(&[1.0, 2.0]),
            Err(EvalError::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn trig_and_log_derivatives() {
        let e = Expression::parse("sin(x1)*cos(x2) + log(x1*x2)", 2).unwrap();
        let (a, b) = (0.7_f64, 1.3_f64);
        let t = e.eval_taylor2(&[a, b]).unwrap();
        let g0 = a.cos() * b.cos() + 1.0 / a;
        let g1 = -a.sin() * b.sin() + 1.0 / b;
        let h00 = -a.sin() * b.cos() - 1.0 / (a * a);
        let h01 = -a.cos() * b.sin();
        let h11 = -a.sin() * b.cos() - 1.0 / (b * b);
        assert!(close(t.gradient[0], g0, 1e-14));
        assert!(close(t.gradient[1], g1, 1e-14));
        assert!(close(t.hess(0, 0), h00, 1e-14));
        assert!(close(t.hess(0, 1), h01, 1e-14));
        assert!(close(t.hess(1, 1), h11, 1e-14));
        assert_eq!(t.hess(0, 1), t.hess(1, 0));
    }

    #[test]
    fn zero_power_is_one_everywhere() {
        let e = Expression::parse("x^0", 1).unwrap();
        let t = e.eval_taylor2(&[0.0]).unwrap();
        assert_eq!((t.value, t.gradient[0], t.hess(0, 0)), (1.0, 0.0, 0.0));
    }

    #[test]
    fn quotient_rule_second_order() {
        let e = Expression::parse("x1/x2", 2).unwrap();
        let (a, b) = (1.5, -0.4);
        let t = e.eval_taylor2(&[a, b]).unwrap();
        assert!(close(t.gradient[0], 1.0 / b, 1e-14));
        assert!(close(t.gradient[1], -a / (b * b), 1e-14));
        assert!(close(t.hess(0, 0), 0.0, 1e-14));
        assert!(close(t.hess(0, 1), -1.0 / (b * b), 1e-14));
        assert!(close(t.hess(1, 1), 2.0 * a / (b * b * b), 1e-14));
    }
}
