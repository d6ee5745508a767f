use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate normal: norm {norm:e} is below 1e-14")]
    DegenerateNormal { norm: f64 },

    #[error("points are antipodal; the shortest geodesic is not unique")]
    NonUniqueGeodesic,

    #[error("points coincide; geodesic direction is undefined")]
    ZeroDistance,

    #[error("no sign change of the surface function on [{lo}, {hi}]")]
    NoIntersection { lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the {0}")]
    OutsideDomain(&'static str),

    #[error("infeasible configuration: {invariant} violated ({detail})")]
    Infeasible {
        invariant: &'static str,
        detail: String,
    },

    #[error("front map is antipodal here (vanishing gradient); V_T is undefined")]
    Antipodal,

    #[error("vertical-degenerate: |grad f| = {slope:e} is below 1e-9")]
    VerticalDegenerate { slope: f64 },

    #[error("slope-bound: |grad f| = {slope} must be < 1")]
    SlopeBound { slope: f64 },

    #[error("path-budget: C = {c} must exceed f = {f}")]
    PathBudget { c: f64, f: f64 },

    #[error("non-finite field value at {0:?}")]
    NonFinite(Vec<f64>),
}

impl Error {
    /// Short stable code, used in report flag columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateNormal { .. } => "degenerate-normal",
            Error::NonUniqueGeodesic => "non-unique-geodesic",
            Error::ZeroDistance => "zero-distance",
            Error::NoIntersection { .. } => "no-intersection",
            Error::NoConvergence { .. } => "convergence",
            Error::Dimension { .. } => "dimension",
            Error::InvalidInput(_) => "invalid-input",
            Error::OutsideDomain(_) => "domain",
            Error::Infeasible { invariant, .. } => invariant,
            Error::Antipodal => "antipodal",
            Error::VerticalDegenerate { .. } => "vertical-degenerate",
            Error::SlopeBound { .. } => "slope-bound",
            Error::PathBudget { .. } => "path-budget",
            Error::NonFinite(_) => "evaluation",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
