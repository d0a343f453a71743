use crate::metric::PointId;

/// Errors shared by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown point id {0}")]
    UnknownPoint(PointId),
    #[error("point id {0} already present")]
    DuplicatePoint(PointId),
    #[error("empty center set with nonempty point set")]
    EmptyCenters,
    #[error("zero total weight")]
    ZeroWeight,
    #[error("weight {weight} for point {id} is not strictly positive")]
    NonpositiveWeight { id: PointId, weight: f64 },
    #[error("metric validation failed: {0}")]
    InvalidMetric(String),
    #[error("enumeration budget exceeded: {subsets} subsets > budget {budget}")]
    BudgetExceeded { subsets: u128, budget: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid update: {0}")]
    InvalidUpdate(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
