use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("non-finite value")]
    NonFinite,
    #[error("tolerance {name} must be strictly positive, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("value {value} outside [0, 1]")]
    Domain { value: String },
    #[error("invalid margin: {0}")]
    InvalidMargin(String),
    #[error("negative mass {value} at cell {cell:?}")]
    NegativeMass { cell: Vec<usize>, value: String },
    #[error("total mass is {total}, expected 1")]
    Normalization { total: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {axis} out of range for a {dims}-dimensional object")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("record {index} has {got} coordinates, expected {expected}")]
    RaggedRecord { index: usize, expected: usize, got: usize },
    #[error("point {point} is not in the subcopula domain")]
    OutsideDomain { point: String },
    #[error("invalid subcopula: {0}")]
    InvalidSubcopula(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("slice {index} of axis {axis} has zero mass; uniform margins unreachable")]
    Support { axis: usize, index: usize },
    #[error("scaling weights must be strictly positive (axis {axis}, index {index})")]
    NonPositiveWeight { axis: usize, index: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
