use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("horizon of {0} hours is not a positive multiple of 24")]
    HorizonNotMultipleOf24(i64),

    #[error("time step {0} is not a valid decision time: (tau + 12) % 24 must be 0")]
    InvalidDecisionTime(i64),

    #[error("series are misaligned: {what} ({left} vs {right})")]
    Misaligned {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("delivery window [{start}, {end}] lies outside the scenario range [{first}, {last}]")]
    OutsideScenario {
        start: i64,
        end: i64,
        first: i64,
        last: i64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("horizon not multiple of 24: file has {0} rows")]
    CsvRowCount(usize),

    #[error("non-finite value in column `{column}` at row {row}")]
    NonFinite { column: String, row: usize },

    #[error("negative value in column `{column}` at row {row}")]
    Negative { column: String, row: usize },

    #[error("cannot parse column `{column}` at row {row}: `{value}`")]
    Parse {
        column: String,
        row: usize,
        value: String,
    },

    #[error("time index at row {row} is {found}, expected {expected}")]
    NonContiguous {
        row: usize,
        found: i64,
        expected: i64,
    },

    #[error("invalid demand response model: {0}")]
    DemandModel(String),

    #[error("invalid price bounds [{min}, {max}]")]
    InfeasibleBounds { min: f64, max: f64 },

    #[error("exhaustive search limited to {max} hours, got {hours}")]
    OracleTooLarge { hours: usize, max: usize },

    #[error("sample count must be at least 1")]
    ZeroSamples,

    #[error("price perturbation must be non-zero")]
    ZeroPerturbation,

    #[error("day {day}: {source}")]
    AtDay {
        day: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_day(self, day: i64) -> Self {
        Error::AtDay {
            day,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_aligned(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::Misaligned { what, left, right });
    }
    Ok(())
}
