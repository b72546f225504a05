use thiserror::Error;

use crate::C64;

/// One failed normal-form condition of a distribution chart.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalFormViolation {
    /// `P(0) != 0`.
    PAtOrigin(C64),
    /// `Q(0) != 0`.
    QAtOrigin(C64),
    /// `Q_x(0) - P_y(0) != 1`.
    Twist(C64),
}

impl std::fmt::Display for NormalFormViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormalFormViolation::PAtOrigin(v) => write!(f, "P(0) = {v} (expected 0)"),
            NormalFormViolation::QAtOrigin(v) => write!(f, "Q(0) = {v} (expected 0)"),
            NormalFormViolation::Twist(v) => write!(f, "Q_x(0) - P_y(0) = {v} (expected 1)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("exponent at {pos} is not an integer")]
    NonIntegerExponent { pos: usize },

    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },

    #[error("non-finite integrand at parameter {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("point lies on the path (distance {distance:e})")]
    PointOnPath { distance: f64 },

    #[error("winding integral {value} is not close to an integer")]
    NonIntegralWinding { value: f64 },

    #[error("path is not closed: endpoint gap {gap:e}")]
    NotClosed { gap: f64 },

    #[error("chart violates the normal form: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    NormalForm(Vec<NormalFormViolation>),

    #[error("pole of `{expr}` inside the chart domain near {point:?}")]
    PoleInDomain { expr: String, point: [C64; 3] },

    #[error("lift left the domain at parameter {s} (point {point:?})")]
    DomainExit { s: f64, point: [C64; 3] },

    #[error("integrator step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("orbit is not star-shaped: angular speed lost its sign at theta = {theta}")]
    OrbitNotStarShaped { theta: f64 },

    #[error("bound violated: {what} (ratio {ratio})")]
    BoundViolated { what: String, ratio: f64 },

    #[error("endpoint moved by {shift:e} under tolerance halving (allowed {allowed:e})")]
    ToleranceInstability { shift: f64, allowed: f64 },

    #[error("displacement at r = {r} is indistinguishable from zero at working precision")]
    BelowPrecision { r: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
