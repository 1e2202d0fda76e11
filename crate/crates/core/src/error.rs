use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not a probability distribution: {0}")]
    NotADistribution(String),
    #[error("cell {cell} = {value} is on the boundary (interior cells required)")]
    BoundaryCell { cell: &'static str, value: f64 },
    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),
    #[error("distribution is inconsistent with {assumptions}: {reason}")]
    InconsistentWithAssumptions {
        assumptions: String,
        reason: String,
    },
    #[error("closed-form share bounds are only available under MTR+MTS (got {0}); use the oracle")]
    SharesNotCovered(String),
    #[error("feasible region is empty: {0}")]
    EmptyRegion(String),
    #[error("latent table is inconsistent with the observed cells: {0}")]
    InconsistentLatent(String),
    #[error("treatment arm d={0} is empty")]
    EmptyArm(u8),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("need at least 2 clusters, found {0}")]
    TooFewClusters(usize),
    #[error("panel values are inconsistent: {0}")]
    InconsistentPanel(String),
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("root could not be bracketed: {0}")]
    NoRoot(String),
    #[error("invalid data-generating process: {0}")]
    InvalidSpec(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
}

impl Error {
    /// Whether the error reflects the data or assumptions rather than bad
    /// arguments. Front ends map these to a distinct exit status.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::InconsistentWithAssumptions { .. }
                | Error::EmptyArm(_)
                | Error::EmptyRegion(_)
                | Error::BoundaryCell { .. }
                | Error::TooFewClusters(_)
                | Error::InconsistentPanel(_)
                | Error::DegenerateDenominator(_)
                | Error::SharesNotCovered(_)
        )
    }
}
