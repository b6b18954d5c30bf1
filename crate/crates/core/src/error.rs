use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("row {row}, feature `{feature}`: {reason}")]
    RowConstraint { row: usize, feature: String, reason: &'static str },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("objective not finite: {0}")]
    NonFinite(String),
    #[error("objective increased at epoch {epoch} ({before} -> {after}); learning rate too large")]
    Diverging { epoch: usize, before: f64, after: f64 },
    #[error("every feature is immutable")]
    NoMutableFeature,
    #[error("target {0} is not a linear model")]
    NonLinearTarget(usize),
    #[error("action grid has {size} points, limit is {limit}")]
    GridTooLarge { size: u128, limit: u128 },
    #[error("bound bracket is negative ({value}); components: {detail}")]
    NegativeBracket { value: f64, detail: String },
    #[error("region is empty: {0}")]
    EmptyRegion(&'static str),
    #[error("no constraint available to calibrate alpha")]
    AlphaUndefined,
}
