use thiserror::Error;

/// Every failure mode of the library. The `code` gives a stable, machine-parseable tag.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("argument on the branch cut (-inf, 1]: z = {re} + {im}i")]
    BranchCut { re: f64, im: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid phase function: {0}")]
    InvalidPhase(String),
    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),
    #[error("dispersion system singular or ill-conditioned (condition {condition:e}) at k = {k}, m = {m}")]
    DispersionSingularity { k: f64, m: i32, condition: f64 },
    #[error("recurrence left the floating-point range at l = {l}")]
    Range { l: usize },
    #[error("field point at the origin")]
    SingularOrigin,
    #[error("coplanar-degenerate geometry: {0}")]
    CoplanarDegenerate(String),
    #[error("k-integral tail does not converge: {0}")]
    TailDivergence(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("integrand convention violated: {0}")]
    Convention(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::BranchCut { .. } => "E_BRANCH",
            Error::InvalidInput(_) => "E_INPUT",
            Error::InvalidPhase(_) => "E_PHASE",
            Error::NumericalConsistency(_) => "E_CONSISTENCY",
            Error::DispersionSingularity { .. } => "E_DISPERSION",
            Error::Range { .. } => "E_RANGE",
            Error::SingularOrigin => "E_ORIGIN",
            Error::CoplanarDegenerate(_) => "E_COPLANAR",
            Error::TailDivergence(_) => "E_TAIL",
            Error::Precondition(_) => "E_PRECONDITION",
            Error::Convention(_) => "E_CONVENTION",
        }
    }

    /// True for failures caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::BranchCut { .. }
                | Error::InvalidInput(_)
                | Error::InvalidPhase(_)
                | Error::SingularOrigin
                | Error::CoplanarDegenerate(_)
                | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
