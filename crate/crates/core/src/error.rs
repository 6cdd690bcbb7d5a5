use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pfaffian needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("entry mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("matrix is not skew-symmetric: {0}")]
    NotSkew(String),
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("dimension {n} exceeds the pfaffian cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("singular leading block: {0}")]
    SingularBlock(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no lattice decomposition of {x} within bound {bound} and tolerance {tol}")]
    NotFound { x: f64, bound: i64, tol: f64 },
    #[error("ambiguous lattice decomposition: {first:?} and {second:?}")]
    AmbiguousDecomposition { first: Vec<i64>, second: Vec<i64> },

    #[error("sequence is not super-increasing at index {0}")]
    NotSuperIncreasing(usize),
    #[error("sequence has {have} terms, {need} needed")]
    SequenceTooShort { have: usize, need: usize },
    #[error("denominator vanishes at the evaluation point")]
    DenominatorZero,
    #[error("monomial collision between minors {first} and {second} at exponent {exponent}")]
    CollisionFound { first: String, second: String, exponent: String },

    #[error("phase matrix entry {0} is not a multiple of 1/q")]
    NotRational(String),
    #[error("representation dimension {dim} exceeds cap {cap}")]
    DimCapExceeded { dim: usize, cap: usize },
    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("spectrum too close to the cut (min distance {0:e})")]
    GapTooSmall(f64),
    #[error("spectrum meets the branch cut (distance {0:e})")]
    SpectrumAtBranchCut(f64),
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid epsilon {eps} for theta {theta}")]
    BadEpsilon { theta: f64, eps: f64 },
    #[error("truncation tail bound {tail:e} at N={n} exceeds the budget {budget}")]
    TruncationInsufficient { n: usize, tail: f64, budget: f64 },
    #[error("truncation degree {n} is not below q={q}")]
    DegreeExceedsQ { n: usize, q: usize },
    #[error("coefficient table is for {table}, requested {requested}")]
    TableMismatch { table: String, requested: String },

    #[error("pf/theta12 = {0} is an integer")]
    IntegerRatio(f64),

    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
