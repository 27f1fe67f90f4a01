use thiserror::Error;

pub type Result<T, E = BdfError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BdfError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operands live on different momentum lattices")]
    LatticeMismatch,

    #[error("nucleus index {index} out of range for {count} nuclei")]
    NucleusIndex { index: usize, count: usize },

    #[error("state not retractable: eigenvalue {eigenvalue} of Q + P0 lies within {tolerance} of 1/2")]
    RetractionAmbiguous { eigenvalue: f64, tolerance: f64 },

    #[error("requested charge {requested} exceeds the positive-energy subspace dimension {available}")]
    ChargeTooLarge { requested: usize, available: usize },

    #[error("divergence guard tripped at t = {t}: ||Q||_HS = {norm} exceeds {bound}")]
    Divergence { t: f64, norm: f64, bound: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
