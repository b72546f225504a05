//! Rational expressions in `x, y, z` over complex coefficients.
//!
//! Expressions are immutable trees of reference-counted nodes, so cloning is
//! cheap and a value can be shared across threads. Evaluation is a plain tree
//! walk; the symbolic derivative folds trivial zeros and ones but does no
//! further simplification.

mod parser;

use std::fmt;
use std::ops;
use std::str::FromStr;
use std::sync::Arc;

use crate::{Error, Result, C64};

/// Independent variable of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::X, Var::Y, Var::Z];

    pub fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::Z => 2,
        }
    }

    pub fn name(self) -> char {
        match self {
            Var::X => 'x',
            Var::Y => 'y',
            Var::Z => 'z',
        }
    }
}

#[derive(Debug, PartialEq)]
enum Node {
    Const(C64),
    Var(Var),
    Neg(RationalExpr),
    Add(RationalExpr, RationalExpr),
    Sub(RationalExpr, RationalExpr),
    Mul(RationalExpr, RationalExpr),
    Div(RationalExpr, RationalExpr),
    Pow(RationalExpr, i32),
}

/// A rational function of `(x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalExpr(Arc<Node>);

impl RationalExpr {
    fn node(node: Node) -> Self {
        RationalExpr(Arc::new(node))
    }

    pub fn constant(value: C64) -> Self {
        Self::node(Node::Const(value))
    }

    pub fn real(value: f64) -> Self {
        Self::constant(C64::new(value, 0.0))
    }

    pub fn var(v: Var) -> Self {
        Self::node(Node::Var(v))
    }

    pub fn powi(&self, n: i32) -> Self {
        Self::node(Node::Pow(self.clone(), n))
    }

    /// Parse an expression such as `(x^2+1)/(y-3*i)`.
    pub fn parse(text: &str) -> Result<Self> {
        parser::parse(text)
    }

    fn as_const(&self) -> Option<C64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_const() == Some(C64::new(0.0, 0.0))
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(C64::new(1.0, 0.0))
    }

    /// Whether the expression syntactically mentions `v`.
    pub fn mentions(&self, v: Var) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Pow(a, _) => a.mentions(v),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.mentions(v) || b.mentions(v)
            }
        }
    }

    /// Evaluate at `p = (x, y, z)`.
    ///
    /// Fails with [`Error::DivisionByZero`] naming the vanishing denominator.
    pub fn eval(&self, p: &[C64; 3]) -> Result<C64> {
        match &*self.0 {
            Node::Const(c) => Ok(*c),
            Node::Var(v) => Ok(p[v.index()]),
            Node::Neg(a) => Ok(-a.eval(p)?),
            Node::Add(a, b) => Ok(a.eval(p)? + b.eval(p)?),
            Node::Sub(a, b) => Ok(a.eval(p)? - b.eval(p)?),
            Node::Mul(a, b) => Ok(a.eval(p)? * b.eval(p)?),
            Node::Div(a, b) => {
                let num = a.eval(p)?;
                let den = b.eval(p)?;
                if den == C64::new(0.0, 0.0) {
                    return Err(Error::DivisionByZero {
                        subexpr: b.to_string(),
                    });
                }
                Ok(num / den)
            }
            Node::Pow(a, n) => {
                let base = a.eval(p)?;
                if *n < 0 && base == C64::new(0.0, 0.0) {
                    return Err(Error::DivisionByZero {
                        subexpr: a.to_string(),
                    });
                }
                Ok(int_pow(base, *n))
            }
        }
    }

    /// Exact partial derivative with respect to `v`.
    pub fn derivative(&self, v: Var) -> RationalExpr {
        match &*self.0 {
            Node::Const(_) => zero(),
            Node::Var(w) => {
                if *w == v {
                    one()
                } else {
                    zero()
                }
            }
            Node::Neg(a) => neg(a.derivative(v)),
            Node::Add(a, b) => add(a.derivative(v), b.derivative(v)),
            Node::Sub(a, b) => sub(a.derivative(v), b.derivative(v)),
            Node::Mul(a, b) => add(
                mul(a.derivative(v), b.clone()),
                mul(a.clone(), b.derivative(v)),
            ),
            Node::Div(a, b) => {
                let da = a.derivative(v);
                let db = b.derivative(v);
                if db.is_zero() {
                    return div(da, b.clone());
                }
                div(
                    sub(mul(da, b.clone()), mul(a.clone(), db)),
                    pow(b.clone(), 2),
                )
            }
            Node::Pow(a, n) => {
                if *n == 0 {
                    return zero();
                }
                let da = a.derivative(v);
                let scaled = mul(RationalExpr::real(*n as f64), pow(a.clone(), *n - 1));
                mul(scaled, da)
            }
        }
    }
}

/// `base^n` by repeated squaring; negative powers invert the result.
fn int_pow(base: C64, n: i32) -> C64 {
    let mut e = n.unsigned_abs();
    let mut acc = C64::new(1.0, 0.0);
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    if n < 0 {
        C64::new(1.0, 0.0) / acc
    } else {
        acc
    }
}

// Folding constructors used by the derivative.

fn zero() -> RationalExpr {
    RationalExpr::real(0.0)
}

fn one() -> RationalExpr {
    RationalExpr::real(1.0)
}

fn neg(a: RationalExpr) -> RationalExpr {
    match a.as_const() {
        Some(c) => RationalExpr::constant(-c),
        None => RationalExpr::node(Node::Neg(a)),
    }
}

fn add(a: RationalExpr, b: RationalExpr) -> RationalExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => RationalExpr::constant(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => RationalExpr::node(Node::Add(a, b)),
    }
}

fn sub(a: RationalExpr, b: RationalExpr) -> RationalExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => RationalExpr::constant(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => RationalExpr::node(Node::Sub(a, b)),
    }
}

fn mul(a: RationalExpr, b: RationalExpr) -> RationalExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => RationalExpr::constant(x * y),
        _ if a.is_zero() || b.is_zero() => zero(),
        _ if a.is_one() => b,
        _ if b.is_one() => a,
        _ => RationalExpr::node(Node::Mul(a, b)),
    }
}

fn div(a: RationalExpr, b: RationalExpr) -> RationalExpr {
    if a.is_zero() {
        return zero();
    }
    if b.is_one() {
        return a;
    }
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != C64::new(0.0, 0.0) => RationalExpr::constant(x / y),
        _ => RationalExpr::node(Node::Div(a, b)),
    }
}

fn pow(a: RationalExpr, n: i32) -> RationalExpr {
    match n {
        0 => one(),
        1 => a,
        _ => match a.as_const() {
            Some(c) if n > 0 => RationalExpr::constant(int_pow(c, n)),
            _ => a.powi(n),
        },
    }
}

impl ops::Add for RationalExpr {
    type Output = RationalExpr;
    fn add(self, rhs: RationalExpr) -> RationalExpr {
        RationalExpr::node(Node::Add(self, rhs))
    }
}

impl ops::Sub for RationalExpr {
    type Output = RationalExpr;
    fn sub(self, rhs: RationalExpr) -> RationalExpr {
        RationalExpr::node(Node::Sub(self, rhs))
    }
}

impl ops::Mul for RationalExpr {
    type Output = RationalExpr;
    fn mul(self, rhs: RationalExpr) -> RationalExpr {
        RationalExpr::node(Node::Mul(self, rhs))
    }
}

impl ops::Div for RationalExpr {
    type Output = RationalExpr;
    fn div(self, rhs: RationalExpr) -> RationalExpr {
        RationalExpr::node(Node::Div(self, rhs))
    }
}

impl ops::Neg for RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        RationalExpr::node(Node::Neg(self))
    }
}

impl FromStr for RationalExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RationalExpr::parse(s)
    }
}

fn fmt_real(f: &mut fmt::Formatter<'_>, v: f64, suffix: &str) -> fmt::Result {
    if v.is_sign_negative() {
        write!(f, "(-{}{suffix})", -v)
    } else {
        write!(f, "{v}{suffix}")
    }
}

/// Fully parenthesised rendering. Re-parsing the output reproduces the same
/// evaluation bit for bit: `f64` display is the shortest exact round-trip form.
impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => {
                if c.im == 0.0 {
                    fmt_real(f, c.re, "")
                } else if c.re == 0.0 && !c.re.is_sign_negative() {
                    fmt_real(f, c.im, "i")
                } else {
                    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
                    f.write_str("(")?;
                    if c.re.is_sign_negative() {
                        write!(f, "-{}", -c.re)?;
                    } else {
                        write!(f, "{}", c.re)?;
                    }
                    write!(f, "{sign}{}i)", c.im.abs())
                }
            }
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, n) => {
                if *n < 0 {
                    write!(f, "({a})^({n})")
                } else {
                    write!(f, "({a})^{n}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn at(x: C64, y: C64, z: C64) -> [C64; 3] {
        [x, y, z]
    }

    fn ev(text: &str, p: [C64; 3]) -> C64 {
        RationalExpr::parse(text).unwrap().eval(&p).unwrap()
    }

    #[test]
    fn literal_examples() {
        let o = c64(0.0, 0.0);
        assert_eq!(ev("0", at(c64(1.3, 2.0), o, o)), o);
        let v = ev("(x^2+1)/(y-3*i)", at(o, o, o));
        assert!((v - c64(0.0, 1.0 / 3.0)).norm() < 1e-15);
        assert_eq!(ev("-y/2", at(c64(1.0, 0.0), c64(2.0, 0.0), c64(5.0, 0.0))), c64(-1.0, 0.0));
        assert_eq!(ev("x*y + z", at(c64(1.0, 0.0), c64(0.0, 1.0), o)), c64(0.0, 1.0));
        assert_eq!(ev("x/2", at(c64(0.37, 0.0), o, o)), c64(0.185, 0.0));
    }

    #[test]
    fn division_by_zero_names_denominator() {
        let e = RationalExpr::parse("1/x").unwrap();
        let err = e.eval(&at(c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0))).unwrap_err();
        match err {
            Error::DivisionByZero { subexpr } => assert_eq!(subexpr, "x"),
            other => panic!("unexpected {other:?}"),
        }
        let e = RationalExpr::parse("x^-2").unwrap();
        assert!(matches!(
            e.eval(&at(c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0))),
            Err(Error::DivisionByZero { .. })
        ));
    }

    #[test]
    fn derivative_examples() {
        let p = at(c64(0.3, -0.2), c64(1.1, 0.4), c64(-0.7, 0.9));
        let d = RationalExpr::parse("x/2").unwrap().derivative(Var::X);
        assert_eq!(d.eval(&p).unwrap(), c64(0.5, 0.0));
        let d = RationalExpr::parse("-y/2").unwrap().derivative(Var::Y);
        assert_eq!(d.eval(&p).unwrap(), c64(-0.5, 0.0));
        let d = RationalExpr::parse("x*z^2").unwrap().derivative(Var::Z);
        let v = d.eval(&at(c64(2.0, 0.0), c64(0.0, 0.0), c64(3.0, 0.0))).unwrap();
        assert_eq!(v, c64(12.0, 0.0));
    }

    #[test]
    fn quotient_and_negative_power_rules() {
        let e = RationalExpr::parse("(x+y)/(x-2*y) + x^-3*z").unwrap();
        let p = at(c64(1.2, 0.3), c64(0.4, -0.5), c64(0.6, 0.1));
        let dx = e.derivative(Var::X).eval(&p).unwrap();
        let (x, y, z) = (p[0], p[1], p[2]);
        let exact = (x - 2.0 * y - (x + y)) / ((x - 2.0 * y) * (x - 2.0 * y))
            - 3.0 * z / (x * x * x * x);
        assert!((dx - exact).norm() < 1e-13 * exact.norm());
    }

    #[test]
    fn contact_twist_is_one() {
        let p = RationalExpr::parse("-y/2").unwrap();
        let q = RationalExpr::parse("x/2").unwrap();
        let twist = q.derivative(Var::X) - p.derivative(Var::Y);
        let pt = at(c64(3.0, 1.0), c64(-2.0, 0.5), c64(0.1, 0.0));
        assert_eq!(twist.eval(&pt).unwrap(), c64(1.0, 0.0));
    }

    #[test]
    fn render_shapes() {
        let e = RationalExpr::parse("-x^2 + 2.5i*y - (1-0.5i)").unwrap();
        let text = e.to_string();
        let back = RationalExpr::parse(&text).unwrap();
        let p = at(c64(0.3, 0.2), c64(-1.0, 0.7), c64(0.0, 0.0));
        assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
        // `^` binds tighter than unary minus.
        assert_eq!(ev("-x^2", at(c64(3.0, 0.0), p[1], p[2])), c64(-9.0, 0.0));
        assert_eq!(RationalExpr::constant(c64(-0.5, -0.25)).to_string(), "(-0.5-0.25i)");
    }

    #[test]
    fn mentions() {
        let e = RationalExpr::parse("x*y/(1+z)").unwrap();
        assert!(e.mentions(Var::Z));
        assert!(!RationalExpr::parse("x*y").unwrap().mentions(Var::Z));
    }
}
