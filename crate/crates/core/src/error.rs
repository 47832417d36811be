use thiserror::Error;

pub type Result<T> = std::result::Result<T, HccmError>;

#[derive(Debug, Error)]
pub enum HccmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unphysical state: {0}")]
    UnphysicalState(String),

    #[error("degenerate beam splitter: {0}")]
    DegenerateSplitter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate design matrix (condition number {condition:.3e} exceeds {limit:.0e})")]
    DegenerateDesign { condition: f64, limit: f64 },

    #[error("anomalous term inaccessible: {0}")]
    AnomalousTermInaccessible(String),

    #[error("Fock truncation insufficient: norm deficit {deficit:.3e} exceeds bound {bound:.1e}")]
    TruncationInsufficient { deficit: f64, bound: f64 },

    #[error("missing calibration run: {0}")]
    MissingCalibration(String),

    #[error("malformed record: {0}")]
    MalformedRecord(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(HccmError::InvalidArgument(format!("{name} must be finite, got {value}")))
    }
}
