use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("group label is empty")]
    EmptyLabel,
    #[error("duplicate group label `{0}`")]
    DuplicateGroup(String),
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("group `{0}` has no observations")]
    ZeroTotalGroup(String),
    #[error("comparison and reference group are both `{0}`")]
    IdenticalGroups(String),
    #[error("negative count {count} for group `{group}`")]
    NegativeCount { group: String, count: i64 },
    #[error("no rows or groups supplied")]
    EmptyInput,
    #[error("table has no observations")]
    ZeroTotalTable,
    #[error("row {row}: missing field `{field}`")]
    MissingField { row: usize, field: String },
    #[error("row {row}: outcome `{token}` is neither the favorable value nor a declared unfavorable value")]
    UnknownOutcome { row: usize, token: String },
    #[error("row-level input needs {0}")]
    MissingRowSpec(&'static str),
    #[error("invalid outcome polarity: {0}")]
    InvalidPolarity(String),
    #[error("invalid reference distribution: {0}")]
    InvalidReferenceDistribution(String),
    #[error("threshold tau must lie strictly between 0 and 1, got {0}")]
    InvalidTau(f64),
    #[error("significance level alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("at least two groups with observations are required, found {0}")]
    TooFewGroups(usize),
    #[error("contingency table has a zero marginal total")]
    ZeroMarginal,
    #[error("continuity correction applies only to 2x2 tables, table has {0} groups")]
    YatesRequiresTwoGroups(usize),
    #[error("test requires exactly two groups, table has {0}")]
    RequiresTwoGroups(usize),
    #[error("goodness of fit needs at least two categories (degrees of freedom must be >= 1)")]
    ZeroDegreesOfFreedom,
    #[error("goodness of fit requested without a reference distribution")]
    MissingReferenceDistribution,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge for s = {s}, x = {x}")]
    NoConvergence { s: f64, x: f64 },
    #[error("duplicate candidate label `{0}`")]
    DuplicateCandidate(String),
    #[error("candidate `{0}` has a non-finite utility")]
    InvalidUtility(String),
    #[error("no candidate reaches the utility floor {0}")]
    NoSufficientAlternative(f64),
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
