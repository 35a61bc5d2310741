use thiserror::Error;

/// Failure to turn expression text into an [`Expr`](crate::scalar_field::Expr).
///
/// Positions are byte offsets into the source text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("variable `{name}` at position {pos} is out of range ({declared} declared)")]
    VariableOutOfRange {
        name: String,
        pos: usize,
        declared: usize,
    },
}

/// Domain failure while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    LogDomain(f64),
    #[error("square root of negative value {0}")]
    SqrtDomain(f64),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("point has {got} {what} coordinates, expression expects {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot parse {context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("evaluation failed at x = {at:?}: {source}")]
    Eval {
        at: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("metric matrix is singular at x = {at:?}")]
    SingularMetric { at: Vec<f64> },
    #[error("metric is not positive definite at x = {at:?} (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { at: Vec<f64>, min_eigenvalue: f64 },
    #[error("Lagrangian Hessian is singular at x = {at:?}, y = {y:?}")]
    SingularLagrangian { at: Vec<f64>, y: Vec<f64> },
    #[error("fiber curve leaves the anchor kernel at t = {t} (residual {residual:e})")]
    KernelViolation { t: f64, residual: f64 },
    #[error("base path cannot be lifted: anchor misses the velocity at node {node} (t = {t}, residual {residual:e})")]
    NotLiftable { node: usize, t: f64, residual: f64 },
    #[error("connection has bundle rank {k} but the algebroid has fiber rank {m}; a linear connection is required")]
    NotLinear { k: usize, m: usize },
    #[error("time grids of path and section do not match")]
    GridMismatch,
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("no liftable loop and trivial anchor kernel at x0 = {x0:?}")]
    EmptyFamily { x0: Vec<f64> },
    #[error("holonomy sample is empty")]
    EmptySample,
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn eval(at: &[f64], source: EvalError) -> Self {
        Error::Eval {
            at: at.to_vec(),
            source,
        }
    }
}
