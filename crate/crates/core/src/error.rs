use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // data errors
    #[error("group `{0}` is empty")]
    EmptyGroup(&'static str),
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("too few distinct points: {distinct} distinct values for {knots} interior knots")]
    TooFewPoints { distinct: usize, knots: usize },
    #[error("value {value} outside the fitted range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("unknown level `{level}` for factor `{factor}`")]
    UnknownLevel { factor: String, level: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric marker value `{value}` in row {row}")]
    NonNumericMarker { row: usize, value: String },
    #[error("tag `{0}` does not occur in the group column")]
    BadTag(String),
    #[error("group column has more than two distinct values")]
    TooManyGroups,
    #[error("malformed data: {0}")]
    BadData(String),

    // configuration errors
    #[error("formula error: {0}")]
    Formula(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),

    // numerical errors
    #[error("Dirichlet concentration must be positive")]
    BadAlpha,
    #[error("stick-breaking fraction outside [0, 1] or last fraction not 1")]
    BadStick,
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("quadrature grid must have an odd number (>= 3) of uniformly spaced points")]
    BadGrid,
    #[error("bracket [{lo}, {hi}] does not straddle the target probability {q}")]
    BracketFail { lo: f64, hi: f64, q: f64 },
    #[error("no kernel weight at x0 = {0}")]
    NoLocalData(f64),
    #[error("design matrix is rank deficient ({rank} < {cols})")]
    RankDeficient { rank: usize, cols: usize },
    #[error("numerical collapse: {0}")]
    NumericalCollapse(String),
    #[error("fitted internals needed for this computation are not available")]
    MissingDraws,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 configuration, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Formula(_)
            | Error::Config(_)
            | Error::DimMismatch(_)
            | Error::BadParameter(_) => 2,
            Error::EmptyGroup(_)
            | Error::ZeroVariance(_)
            | Error::TooFewPoints { .. }
            | Error::OutOfRange { .. }
            | Error::UnknownLevel { .. }
            | Error::MissingColumn(_)
            | Error::NonNumericMarker { .. }
            | Error::BadTag(_)
            | Error::TooManyGroups
            | Error::BadData(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 3,
            Error::BadAlpha
            | Error::BadStick
            | Error::NotSpd
            | Error::BadGrid
            | Error::BracketFail { .. }
            | Error::NoLocalData(_)
            | Error::RankDeficient { .. }
            | Error::NumericalCollapse(_)
            | Error::MissingDraws => 4,
        }
    }
}
