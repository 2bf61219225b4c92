use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// Dimension failures always carry the offending sizes so callers can
/// report them without re-deriving shapes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: expected length {expected}, got {got}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{op}: shapes {a_rows}x{a_cols} and {b_rows}x{b_cols} do not compose")]
    ShapeMismatch {
        op: &'static str,
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },

    #[error("{op}: non-finite value at index {index}")]
    NonFinite { op: &'static str, index: usize },

    #[error("densify of {rows}x{cols} needs {elements} elements, budget is {budget}")]
    BudgetExceeded {
        rows: usize,
        cols: usize,
        elements: usize,
        budget: usize,
    },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("{path}: {detail} (byte offset {offset})")]
    IdxFormat {
        path: String,
        detail: String,
        offset: u64,
    },

    #[error("{path}: row {row}, column {col}: {detail}")]
    CsvFormat {
        path: String,
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("matrix market: {0}")]
    MarketFormat(String),

    #[error("training diverged: non-finite {what} in parameter {param} at update {step}")]
    Diverged {
        what: &'static str,
        param: String,
        step: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
