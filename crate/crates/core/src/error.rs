use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series has no surviving term: cannot invert")]
    ZeroDivisor,
    #[error("element is zero modulo truncation")]
    ZeroInput,
    #[error("element is not bounded; standard part undefined")]
    Unbounded,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("thickening radius must be non-negative, got {0}")]
    NegativeEps(f64),
    #[error("polyhedron is unbounded")]
    UnboundedInput,
    #[error("polyhedron has a coordinate that may be -inf")]
    HasMinusInfinity,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("polynomial is zero")]
    ZeroPolynomial,
    #[error("region is unbounded")]
    UnboundedRegion,
    #[error("evaluation at a point with a zero coordinate")]
    ZeroCoordinate,
    #[error("point lies on the zero locus of the function")]
    OnZeroLocus,
    #[error("point lies outside every chart of the function")]
    OutsideDomain,
    #[error("coefficient support is unbounded")]
    UnboundedSupport,
    #[error("forms live on different charts")]
    ChartMismatch,
    #[error("coefficient at {0} is not vanishing along its index set")]
    NotVanishing(String),
    #[error("integration domain is not compact")]
    NonCompactDomain,
    #[error("node budget exceeded: {0} nodes requested")]
    BudgetExceeded(u64),
    #[error("root cluster too close to the filter boundary")]
    IllConditioned,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
