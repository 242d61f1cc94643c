use alloc::string::String;

/// Everything that can go wrong inside the solver pipeline.
///
/// Each variant belongs to exactly one pipeline stage; [`Error::module`]
/// names it so front ends can tag messages.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a sub-generator: {0}")]
    NotSubgenerator(String),
    #[error("not a generator: {0}")]
    NotGenerator(String),
    #[error("invalid initial vector: {0}")]
    InvalidInitialVector(String),
    #[error("invalid vacation rate {0}")]
    InvalidVacationRate(f64),
    #[error("service process is reducible")]
    Reducible,
    #[error("queue is unstable: rho = {rho}")]
    Unstable { rho: f64 },
    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),
    #[error("uniformization needs more than {0} terms")]
    TailBoundExceeded(usize),

    #[error("kernel truncation too small: tail deficit {deficit:e} for family {family} at n_max = {n_max}")]
    TruncationTooSmall {
        family: &'static str,
        deficit: f64,
        n_max: usize,
    },
    #[error("negative entry {value:e} in kernel family {family} at index {index}")]
    NegativeEntry {
        family: &'static str,
        index: usize,
        value: f64,
    },

    #[error("resolvent is singular at z = {re} + {im}i")]
    SingularResolvent { re: f64, im: f64 },
    #[error("expected {expected} roots inside the unit disk, found {found}")]
    RootCountMismatch { expected: usize, found: usize },
    #[error("root polishing diverged (residual {0:e})")]
    PolishDivergence(f64),
    #[error("roots closer than {0:e}: multiple roots are not supported")]
    MultipleRootsUnsupported(f64),
    #[error("no real solution in the search interval")]
    NoRealSolutionInBracket,
    #[error("approximation order {order} exceeds the number of roots {roots}")]
    OrderExceedsRoots { order: usize, roots: usize },

    #[error("boundary system is ill-conditioned (condition {0:e})")]
    IllConditioned(f64),
    #[error("conjugate asymmetry {0:e} in the boundary solution")]
    ConjugateAsymmetry(f64),
    #[error("negative probability {value:e} at level {level}")]
    NegativeProbability { level: usize, value: f64 },
    #[error("probability mass defect {0:e}")]
    MassDefect(f64),
    #[error("normalization failed: {0}")]
    NormalizationFailure(String),
    #[error("series diverges: {0}")]
    SeriesDivergence(String),

    #[error("moment overflow: {0}")]
    Overflow(String),
    #[error("Padé system is singular")]
    SingularPadeSystem,
    #[error("denominator roots are not all real and negative")]
    ComplexDenominatorRoots,
    #[error("interval variance is degenerate")]
    DegenerateVariance,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            DimensionMismatch(_) | NotSubgenerator(_) | NotGenerator(_) | InvalidInitialVector(_)
            | InvalidVacationRate(_) | Reducible | Unstable { .. } | SingularMatrix(_)
            | TailBoundExceeded(_) => "model-core",
            TruncationTooSmall { .. } | NegativeEntry { .. } => "kernels",
            SingularResolvent { .. } | RootCountMismatch { .. } | PolishDivergence(_)
            | MultipleRootsUnsupported(_) | NoRealSolutionInBracket | OrderExceedsRoots { .. } => {
                "roots"
            }
            IllConditioned(_) | ConjugateAsymmetry(_) | NegativeProbability { .. }
            | MassDefect(_) | NormalizationFailure(_) | SeriesDivergence(_) => "solver",
            Overflow(_) | SingularPadeSystem | ComplexDenominatorRoots | DegenerateVariance => {
                "phfit"
            }
            InvalidConfig(_) => "simulator",
        }
    }

    /// Input problems as opposed to numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(self.module(), "model-core")
            && !matches!(self, Error::SingularMatrix(_) | Error::TailBoundExceeded(_))
            || matches!(self, Error::InvalidConfig(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;
