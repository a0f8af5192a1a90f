use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shift is empty: pruning removed every symbol")]
    EmptyShift,

    #[error("resource limit exceeded: {what} would need {needed}, cap is {cap}")]
    ResourceLimit { what: String, needed: u128, cap: u128 },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("index {index} out of range for word of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("symbol mismatch: {0}")]
    SymbolMismatch(String),

    #[error("illegal word: {0}")]
    IllegalWord(String),

    #[error("no transition block found with |w| <= {lmax} (best depth seen: {best_depth:?})")]
    NotFoundWithinBound { lmax: usize, best_depth: Option<usize> },

    #[error("periodic fiber graph did not stabilise within {cap} powers (period {period})")]
    PeriodTooLarge { period: usize, cap: usize },

    #[error("word is not routable through any symbol of the block")]
    NotRoutable,

    #[error("word is routable through {0} symbols of the block")]
    NotUnique(usize),

    #[error("shift is not irreducible")]
    NotIrreducible,

    #[error("conditioning word has zero mass")]
    ZeroMassWord,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("no occurrence of the transition word within a window of {window}")]
    NoOccurrences { window: usize },

    #[error("too few marks: found {found}, need {needed}")]
    TooFewMarks { found: usize, needed: usize },

    #[error("aligned blocks share no routing symbol at offset {position}")]
    NoCommonSymbol { position: usize },

    #[error("splice hit a block pair with no routing function at {position}")]
    RoutingGap { position: usize },

    #[error("separator word has equal probability under both measures")]
    DegenerateSeparator,

    #[error("no feasible (N, p) cell in the supplied grid")]
    NoFeasibleCell,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
