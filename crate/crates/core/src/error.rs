use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("missing value at line {line} in column `{column}`")]
    MissingValue { line: u64, column: String },

    #[error("unparseable number {value:?} at line {line} in continuous column `{column}`")]
    UnparseableNumber {
        line: u64,
        column: String,
        value: String,
    },

    #[error("unknown category {value:?} at line {line} in column `{column}`")]
    UnknownCategory {
        line: u64,
        column: String,
        value: String,
    },

    #[error("unknown outcome label {value:?} at line {line}")]
    UnknownLabel { line: u64, value: String },

    #[error("empty table")]
    EmptyTable,

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("arity mismatch: expected {expected} cells, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("unparseable number {value:?} for continuous attribute `{column}`")]
    InvalidQueryNumber { column: String, value: String },

    #[error("cell kind does not match attribute `{0}`")]
    KindMismatch(String),

    #[error("row {index} out of bounds for a table of {rows} rows")]
    RowOutOfBounds { index: usize, rows: usize },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("distance {distance} outside the kernel domain [0, {max}]")]
    DistanceOutOfRange { distance: f64, max: f64 },

    #[error("{0}")]
    Contract(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSyntheticSpec(String),

    #[error("unsupported {what} version {found} (expected {expected})")]
    UnsupportedVersion {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
