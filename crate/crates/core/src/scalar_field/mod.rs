//! Closed-form scalar functions of the base coordinates `x1..xn` (and, for
//! Lagrangians, the fiber coordinates `y1..ym`).
//!
//! Expressions are parsed once into an immutable tree and evaluated over any
//! [`Scalar`]. First partials come from forward-mode [`Dual`] numbers, so they
//! are exact to rounding; nesting duals gives second partials where a caller
//! needs them.
//!
//! Domain violations (`log` of a non-positive value, division by zero, ...)
//! are errors rather than NaNs so that residual checks downstream cannot pass
//! on a NaN by accident.

mod dual;
mod parser;

use std::fmt;

pub use dual::{Dual, Scalar};

use crate::error::{EvalError, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply<S: Scalar>(self, v: S) -> Result<S, EvalError> {
        let out = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => {
                if v.re() <= 0.0 {
                    return Err(EvalError::LogDomain(v.re()));
                }
                v.ln()
            }
            Func::Sqrt => {
                if v.re() < 0.0 {
                    return Err(EvalError::SqrtDomain(v.re()));
                }
                v.sqrt()
            }
            Func::Abs => v.abs(),
        };
        if out.all_finite() {
            Ok(out)
        } else {
            Err(EvalError::NonFinite(self.name()))
        }
    }
}

/// Expression tree. Variable indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    X(usize),
    Y(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, EvalError> {
        Ok(match self {
            Node::Const(c) => S::from_f64(*c),
            Node::X(i) => x[*i],
            Node::Y(a) => y[*a],
            Node::Neg(e) => -e.eval(x, y)?,
            Node::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            Node::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            Node::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            Node::Div(a, b) => {
                let num = a.eval(x, y)?;
                let den = b.eval(x, y)?;
                if den.re() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Node::Pow(base, n) => {
                let b = base.eval(x, y)?;
                if *n < 0 {
                    if b.re() == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    S::one() / b.powi(-n)
                } else {
                    b.powi(*n)
                }
            }
            Node::Call(f, arg) => f.apply(arg.eval(x, y)?)?,
        })
    }

    fn is_const_zero(&self) -> bool {
        matches!(self, Node::Const(c) if *c == 0.0)
    }
}

/// A parsed scalar function of `n_x` base and `n_y` fiber coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    n_x: usize,
    n_y: usize,
}

/// Parse `text` as a function of `x1..x{n_vars}`.
pub fn parse_expr(text: &str, n_vars: usize) -> Result<Expr, ParseError> {
    Expr::parse(text, n_vars)
}

impl Expr {
    pub fn parse(text: &str, n_x: usize) -> Result<Expr, ParseError> {
        Expr::parse_xy(text, n_x, 0)
    }

    /// Parse a function of `(x, y)`, e.g. a Lagrangian.
    pub fn parse_xy(text: &str, n_x: usize, n_y: usize) -> Result<Expr, ParseError> {
        let root = parser::Parser::new(text, n_x, n_y)?.parse()?;
        Ok(Expr { root, n_x, n_y })
    }

    pub fn constant(value: f64, n_x: usize) -> Expr {
        Expr {
            root: Node::Const(value),
            n_x,
            n_y: 0,
        }
    }

    /// Build from a raw tree. Panics if the tree references undeclared variables.
    pub fn from_node(root: Node, n_x: usize, n_y: usize) -> Expr {
        fn check(node: &Node, n_x: usize, n_y: usize) {
            match node {
                Node::Const(_) => {}
                Node::X(i) => assert!(*i < n_x, "x{} out of range", i + 1),
                Node::Y(a) => assert!(*a < n_y, "y{} out of range", a + 1),
                Node::Neg(e) | Node::Pow(e, _) | Node::Call(_, e) => check(e, n_x, n_y),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    check(a, n_x, n_y);
                    check(b, n_x, n_y);
                }
            }
        }
        check(&root, n_x, n_y);
        Expr { root, n_x, n_y }
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// True when the tree is the literal `0`.
    pub fn is_zero(&self) -> bool {
        self.root.is_const_zero()
    }

    fn check_dims(&self, nx: usize, ny: usize) -> Result<(), EvalError> {
        if nx != self.n_x {
            return Err(EvalError::Dimension {
                what: "base",
                got: nx,
                expected: self.n_x,
            });
        }
        if self.n_y > 0 && ny != self.n_y {
            return Err(EvalError::Dimension {
                what: "fiber",
                got: ny,
                expected: self.n_y,
            });
        }
        Ok(())
    }

    /// Evaluate over an arbitrary scalar type.
    pub fn eval_with<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, EvalError> {
        self.check_dims(x.len(), y.len())?;
        let v = self.root.eval(x, y)?;
        if v.all_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite("expression"))
        }
    }

    pub fn eval(&self, p: &CoordPoint) -> Result<f64, EvalError> {
        self.eval_with(&p.x, &p.y)
    }

    /// Value and directional derivative along `(dx, dy)`, exact via duals.
    pub fn eval_directional<S: Scalar>(
        &self,
        x: &[S],
        dx: &[S],
        y: &[S],
        dy: &[S],
    ) -> Result<Dual<S>, EvalError> {
        let xd: Vec<Dual<S>> = x.iter().zip(dx).map(|(&v, &d)| Dual::new(v, d)).collect();
        let yd: Vec<Dual<S>> = y.iter().zip(dy).map(|(&v, &d)| Dual::new(v, d)).collect();
        self.eval_with(&xd, &yd)
    }

    /// Partial derivative with respect to variable `var` (x-block first, then
    /// y-block), evaluated over any scalar type.
    pub fn partial_with<S: Scalar>(&self, var: usize, x: &[S], y: &[S]) -> Result<S, EvalError> {
        let mut dx = vec![S::zero(); x.len()];
        let mut dy = vec![S::zero(); y.len()];
        if var < x.len() {
            dx[var] = S::one();
        } else if var - x.len() < y.len() {
            dy[var - x.len()] = S::one();
        } else {
            return Err(EvalError::Dimension {
                what: "variable index",
                got: var,
                expected: x.len() + y.len(),
            });
        }
        Ok(self.eval_directional(x, &dx, y, &dy)?.eps)
    }

    /// `∂e/∂v_i` at `p`, where `i` indexes `x1..xn` then `y1..ym`.
    pub fn partial(&self, i: usize, p: &CoordPoint) -> Result<f64, EvalError> {
        self.partial_with(i, &p.x, &p.y)
    }

    /// Gradient with respect to the base coordinates.
    pub fn gradient_x<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>, EvalError> {
        (0..x.len()).map(|i| self.partial_with(i, x, y)).collect()
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            Node::Const(c) => write!(f, "{c:?}"),
            Node::X(i) => write!(f, "x{}", i + 1),
            Node::Y(a) => write!(f, "y{}", a + 1),
            Node::Neg(e) => write!(f, "(-{e})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(b, n) => write!(f, "pow({b}, {n})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// A point `(x, y)`; `y` is empty for functions of the base only.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl CoordPoint {
    pub fn base(x: impl Into<Vec<f64>>) -> Self {
        CoordPoint {
            x: x.into(),
            y: Vec::new(),
        }
    }

    pub fn with_fiber(x: impl Into<Vec<f64>>, y: impl Into<Vec<f64>>) -> Self {
        CoordPoint {
            x: x.into(),
            y: y.into(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: &[f64]) -> CoordPoint {
        CoordPoint::base(x.to_vec())
    }

    #[test]
    fn parses_sum_of_two_terms() {
        let e = parse_expr("x1*x1 + sin(x2)", 2).unwrap();
        assert!(matches!(e.node(), Node::Add(_, _)));
        let v = e.eval(&at(&[2.0, 0.0])).unwrap();
        assert_eq!(v, 4.0);
    }

    #[test]
    fn rejects_out_of_range_variable() {
        let err = parse_expr("x3", 2).unwrap_err();
        assert!(matches!(
            err,
            ParseError::VariableOutOfRange {
                pos: 0,
                declared: 2,
                ..
            }
        ));
        assert!(parse_expr("x0", 2).is_err());
        assert!(parse_expr("y1", 2).is_err());
    }

    #[test]
    fn reports_syntax_error_at_end() {
        match parse_expr("x1 +", 1).unwrap_err() {
            ParseError::Syntax { pos, msg } => {
                assert_eq!(pos, 4);
                assert!(msg.contains("end of input"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            parse_expr("foo(x1)", 1),
            Err(ParseError::UnknownIdentifier { pos: 0, .. })
        ));
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_expr("  x1  *  ( x2+1 )", 2).unwrap();
        let b = parse_expr("x1*(x2+1)", 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse_expr("-x1^2 + 2*3", 1).unwrap();
        assert_eq!(e.eval(&at(&[3.0])).unwrap(), -3.0);
        let e = parse_expr("2^-1 + pow(x1, 3) / 2", 1).unwrap();
        assert_eq!(e.eval(&at(&[2.0])).unwrap(), 4.5);
        assert!(parse_expr("x1^0.5", 1).is_err());
        assert!(parse_expr("x1^2^3", 1).is_err());
    }

    #[test]
    fn simple_evaluations() {
        assert_eq!(
            parse_expr("x1+2", 1).unwrap().eval(&at(&[1.0])).unwrap(),
            3.0
        );
        assert_eq!(
            parse_expr("sin(x1)", 1).unwrap().eval(&at(&[0.0])).unwrap(),
            0.0
        );
        let pi = parse_expr("pi", 0).unwrap().eval(&at(&[])).unwrap();
        assert_eq!(pi, std::f64::consts::PI);
        let e = parse_expr("1.5e-3 * 2E2", 0).unwrap();
        assert!((e.eval(&at(&[])).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_are_reported() {
        let p = at(&[0.0]);
        assert_eq!(
            parse_expr("log(x1)", 1).unwrap().eval(&p),
            Err(EvalError::LogDomain(0.0))
        );
        assert_eq!(
            parse_expr("1/x1", 1).unwrap().eval(&p),
            Err(EvalError::DivisionByZero)
        );
        assert_eq!(
            parse_expr("x1^-2", 1).unwrap().eval(&p),
            Err(EvalError::DivisionByZero)
        );
        assert!(matches!(
            parse_expr("sqrt(x1 - 1)", 1).unwrap().eval(&p),
            Err(EvalError::SqrtDomain(_))
        ));
        assert!(matches!(
            parse_expr("exp(exp(x1 + 10))", 1).unwrap().eval(&p),
            Err(EvalError::NonFinite(_))
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let e = parse_expr("x1", 2).unwrap();
        assert!(matches!(
            e.eval(&at(&[1.0])),
            Err(EvalError::Dimension { .. })
        ));
    }

    #[test]
    fn polynomial_partials() {
        let e = parse_expr("x1*x1", 1).unwrap();
        assert_eq!(e.partial(0, &at(&[2.0])).unwrap(), 4.0);
        let e = parse_expr("x1", 2).unwrap();
        assert_eq!(e.partial(1, &at(&[0.3, -7.0])).unwrap(), 0.0);
    }

    #[test]
    fn partial_with_respect_to_fiber_variable() {
        let e = Expr::parse_xy("x1*y1*y1 + y2", 1, 2).unwrap();
        let p = CoordPoint::with_fiber(vec![3.0], vec![2.0, 5.0]);
        assert_eq!(e.partial(1, &p).unwrap(), 12.0);
        assert_eq!(e.partial(2, &p).unwrap(), 1.0);
        assert_eq!(e.partial(0, &p).unwrap(), 4.0);
    }

    #[test]
    fn display_round_trips() {
        let e = parse_expr("-x1^3 / (2 - cos(x2)) + abs(-1.25e-7*x1)", 2).unwrap();
        let again = parse_expr(&e.to_string(), 2).unwrap();
        let p = at(&[0.7, -1.3]);
        assert_eq!(e.eval(&p).unwrap(), again.eval(&p).unwrap());
        let neg = Expr::from_node(
            Node::Mul(Box::new(Node::Const(-2.0)), Box::new(Node::X(0))),
            1,
            0,
        );
        let again = parse_expr(&neg.to_string(), 1).unwrap();
        assert_eq!(again.eval(&at(&[3.0])).unwrap(), -6.0);
    }
}
