use thiserror::Error;

/// Errors raised by the library. Negative findings (no recurrence, no
/// perturbation found, no interval) are reported as data, not as errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("similarity dimension needs at least two maps, got {0}")]
    TooFewMaps(usize),

    #[error("ratio {ratio} of map '{symbol}' is not in (0, 1)")]
    BadRatio { symbol: String, ratio: f64 },

    #[error("contraction ratio {0} is not in (0, 1)")]
    BadRatioValue(f64),

    #[error("similarity dimension exceeds the solver bracket [1e-9, 64]")]
    DimensionOutOfBracket,

    #[error("duplicate symbol '{0}'")]
    DuplicateSymbol(String),

    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),

    #[error("symbol index {0} is outside the alphabet")]
    SymbolOutOfRange(usize),

    #[error("maps: missing symbol '{0}'")]
    MissingMap(String),

    #[error("part_one must be a nonempty proper subset of the alphabet")]
    BadPartition,

    #[error("image of map '{0}' leaves the unit square")]
    LeavesUnitSquare(String),

    #[error("not comparable: {0}")]
    NotComparable(String),

    #[error("degenerate line: the two points coincide")]
    DegenerateLine,

    #[error("budget exceeded: {what} count {count} exceeds budget {budget}")]
    BudgetExceeded {
        what: &'static str,
        count: u64,
        budget: u64,
    },

    #[error("rho too large for dimension d = {d}: required word count rounds below 1")]
    RhoTooLarge { d: f64 },

    #[error("empty candidate: every slice is empty")]
    EmptyCandidate,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("d ≤ 1, theorem hypotheses unmet (d = {0:.12})")]
    DimensionTooSmall(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
