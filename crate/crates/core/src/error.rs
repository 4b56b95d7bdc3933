use thiserror::Error;

/// Failure classes surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid map specification: {0}")]
    InvalidSpec(String),
    #[error("degenerate width: {0}")]
    DegenerateWidth(String),
    #[error("bridge on [{lo}, {hi}] is not monotone ({detail})")]
    MonotonicityViolated { lo: f64, hi: f64, detail: String },
    #[error("bound violated: {name} = {value:.6e} exceeds {bound:.6e}")]
    BoundViolated { name: String, value: f64, bound: f64 },
    #[error("no reference orbit: {0}")]
    NoReferenceOrbit(String),
    #[error("no sign change of the landing residual in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("fiber domain is not invariant: {0}")]
    NotInvariant(String),
    #[error("perturbation budget exceeded: {name} = {value:.6e} > {bound:.6e}")]
    BudgetExceeded { name: String, value: f64, bound: f64 },
    #[error("alpha = {alpha:e} too large: constraint 32^M α < 1 needs M >= 1")]
    AlphaTooLarge { alpha: f64 },
    #[error("constraint violated: {name} ({detail})")]
    ConstraintViolated { name: String, detail: String },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("curve not admissible: {0}")]
    NotAdmissible(String),
    #[error("admissibility lost on element {element}: max|Y'| = {max_d1:.6e}, max|Y''| = {max_d2:.6e}, alpha = {alpha:.6e}")]
    AdmissibilityLost {
        element: String,
        max_d1: f64,
        max_d2: f64,
        alpha: f64,
    },
    #[error("partition index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("no separated branch sets: best separation {best:.6e} < required {required:.6e}")]
    NoSeparatedSets { best: f64, required: f64 },
}

impl Error {
    /// Errors signalling a violated constant constraint rather than a failed construction.
    pub fn is_constraint(&self) -> bool {
        matches!(
            self,
            Error::AlphaTooLarge { .. } | Error::ConstraintViolated { .. }
        )
    }

    /// Errors raised by input validation before any computation.
    pub fn is_invalid_input(&self) -> bool {
        matches!(self, Error::InvalidSpec(_) | Error::PreconditionViolated(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
