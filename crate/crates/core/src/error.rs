use thiserror::Error;

use crate::solvers::SolveResult;
use crate::space::ExtendedReal;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone)]
pub enum Error {
    #[error("invalid point: coordinate {index} is {value}")]
    InvalidPoint { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot project the origin onto a sphere")]
    DegenerateProjection,

    #[error("undefined arithmetic on +inf: {0}")]
    InfinityArithmetic(&'static str),

    #[error("invalid tolerance `{name}`: {detail}")]
    InvalidTolerance { name: &'static str, detail: String },

    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("parameter `{param}` of {functional} out of domain: {detail}")]
    ParameterDomain { functional: String, param: String, detail: String },

    #[error("gradient of {0} is undefined at the origin")]
    GradientUndefined(String),

    #[error("functional {0} is not radial")]
    NotRadial(String),

    #[error("solver failure in {context}")]
    SolverFailure { context: String, best: Option<Box<SolveResult>> },

    #[error("grid oracle supports n <= 3, got n = {0}")]
    OracleUnsupported(usize),

    #[error("level r = {r} is outside ]{beta}, {upper}[")]
    InfeasibleLevel { r: f64, beta: f64, upper: ExtendedReal },

    #[error("target {target} outside the achievable interval [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("maximum of J on the ball is attained at the origin only")]
    DegenerateMaximum,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("multiplicity not found in r-bracket [{lo}, {hi}]: {detail}", lo = bracket.0, hi = bracket.1)]
    MultiplicityNotFound { bracket: (f64, f64), detail: String, radial: bool },
}
