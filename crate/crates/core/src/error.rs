use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is out of range (expected {expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("rate is zero at every scanned intensity")]
    DegenerateOptimum,

    #[error("sweep cell {index} (D = {distance_km} km, r_E = {leak_fraction}) failed: {source}")]
    SweepCell {
        index: usize,
        distance_km: f64,
        leak_fraction: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("need at least {needed} usable samples, got {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("trace geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("expected count per test pulse {expected} is below the usable floor {floor}")]
    UnusableEstimate { expected: f64, floor: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check(
    ok: bool,
    name: &'static str,
    value: impl Into<f64>,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: value.into(),
            expected,
        })
    }
}
