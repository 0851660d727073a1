use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // bar validation and preprocessing
    #[error("low price must be strictly positive (low = {low})")]
    NonPositiveLow { low: f64 },
    #[error("high price must exceed low price (high = {high}, low = {low})")]
    DegenerateRange { high: f64, low: f64 },
    #[error("{which} price {value} lies outside [low, high] = [{low}, {high}]")]
    OutOfRangeOpenClose { which: &'static str, value: f64, low: f64, high: f64 },
    #[error("negative price in bar ({field} = {value})")]
    NegativePrice { field: &'static str, value: f64 },
    #[error("inconsistent bar: {which} = {value} outside [low, high] = [{low}, {high}]")]
    InconsistentBounds { which: &'static str, value: f64, low: f64, high: f64 },
    #[error("convex coefficient of {which} price is {lambda}; preprocess the bar first")]
    DegenerateLambda { which: &'static str, lambda: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("price range {range} is below the resolution of low price {low}")]
    RangeBelowResolution { low: f64, range: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // feature space
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),

    // eigen / pca
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("requested {requested} components, but 1..={available} are available")]
    ComponentsOutOfRange { requested: usize, available: usize },
    #[error("at least {required} observations are required, got {got}")]
    TooFewObservations { required: usize, got: usize },
    #[error("variable labels do not match the model: expected {expected:?}, got {got:?}")]
    LabelMismatch { expected: Vec<String>, got: Vec<String> },

    // simulation
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vector is not unit norm (norm = {norm})")]
    NotUnitNorm { norm: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    // io
    #[error("{path}: missing or malformed header, expected `{expected}`")]
    MissingHeader { path: String, expected: String },
    #[error("{path}: line {line}: column `{column}`: cannot parse `{value}` as a number")]
    BadNumeric { path: String, line: usize, column: String, value: String },
    #[error("{path}: line {line}: duplicate entry for ({entity}, {variable})")]
    DuplicateKey { path: String, line: usize, entity: String, variable: String },
    #[error("{path}: entity `{entity}` has no value for variable `{variable}`")]
    RaggedPivot { path: String, entity: String, variable: String },
    #[error("{path}: line {line}: {message}")]
    Csv { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("nothing to render")]
    EmptyInput,
    #[error("invalid chart specification: {0}")]
    InvalidChart(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io { path: path.display().to_string(), message: err.to_string() }
    }
}
