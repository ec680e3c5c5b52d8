use thiserror::Error;

pub type Result<T> = std::result::Result<T, ShadowError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShadowError {
    #[error("time index {index} is past the end of a finite schedule of length {len}")]
    IndexOutOfSchedule { index: usize, len: usize },
    #[error("point {point} does not belong to space {space}")]
    PointOutsideSpace { point: String, space: String },
    #[error("family is not expanding (no inverse-branch radius or contraction rates)")]
    NotExpanding,
    #[error("distance {distance} from the branch base is not below the branch radius {radius}")]
    PointOutsideBranchDomain { distance: f64, radius: f64 },
    #[error("branch {branch} requested but the base point has {count} preimages")]
    InvalidBranchId { branch: usize, count: usize },
    #[error("noise {noise} exceeds the diameter {diameter} of the space")]
    NoiseExceedsSpace { noise: f64, diameter: f64 },
    #[error("no admissible displacement of size {size} at step {index}")]
    DisplacementUnavailable { index: usize, size: f64 },
    #[error("operation requires a constant state space")]
    NonConstantSpaces,
    #[error("density requested over an empty window")]
    ZeroHorizon,
    #[error("final Cesàro mean {mean} exceeds the first level {level}")]
    NotCesaroNull { mean: f64, level: f64 },
    #[error("sequence value {value} at index {index} exceeds the declared bound {bound}")]
    BoundViolated { index: usize, value: f64, bound: f64 },
    #[error("menu R_{level} has no admissible boundary below the horizon")]
    MenuExhausted { level: usize },
    #[error("epsilon {epsilon} must be below half the branch radius ({limit})")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },
    #[error("defect {defect} at step {index} is not below the budget {budget}")]
    DeltaBudgetViolated { index: usize, defect: f64, budget: f64 },
    #[error("pullback at step {index} leaves the branch domain")]
    BranchDomainViolated { index: usize },
    #[error("pullback cell at step {index} is empty")]
    EmptyCell { index: usize },
    #[error("pseudo-orbit is not periodic with period {period}")]
    NonPeriodicInput { period: usize },
    #[error("contraction rates are not bounded away from 1 (sup = {sup})")]
    SupRateNotBounded { sup: f64 },
    #[error("no rung of the modulus ladder keeps pairs {epsilon}-close up to the horizon")]
    NotEquicontinuousAtHorizon { epsilon: f64 },
    #[error("no preimage found at step {index}")]
    PreimageSearchFailed { index: usize },
    #[error("limit-shadowing candidates did not settle (last gap {gap})")]
    NoConvergence { gap: f64 },
    #[error("invariant subset is empty")]
    EmptyA,
    #[error("no averaged-shadowing oracle for this invariant subset: {0}")]
    OracleUnavailable(String),
    #[error("hypothesis not met: {0}")]
    HypothesisFailed(String),
    #[error("factor schedules are incompatible: {0}")]
    ScheduleMismatch(String),
    #[error("enumeration budget of {budget} pseudo-orbits exceeded")]
    BudgetExceeded { budget: usize },
    #[error("invalid configuration at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl ShadowError {
    /// Stable identifier used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Self::IndexOutOfSchedule { .. } => "IndexOutOfSchedule",
            Self::PointOutsideSpace { .. } => "PointOutsideSpace",
            Self::NotExpanding => "NotExpanding",
            Self::PointOutsideBranchDomain { .. } => "PointOutsideBranchDomain",
            Self::InvalidBranchId { .. } => "InvalidBranchId",
            Self::NoiseExceedsSpace { .. } => "NoiseExceedsSpace",
            Self::DisplacementUnavailable { .. } => "DisplacementUnavailable",
            Self::NonConstantSpaces => "NonConstantSpaces",
            Self::ZeroHorizon => "ZeroHorizon",
            Self::NotCesaroNull { .. } => "NotCesaroNull",
            Self::BoundViolated { .. } => "BoundViolated",
            Self::MenuExhausted { .. } => "MenuExhausted",
            Self::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Self::DeltaBudgetViolated { .. } => "DeltaBudgetViolated",
            Self::BranchDomainViolated { .. } => "BranchDomainViolated",
            Self::EmptyCell { .. } => "EmptyCell",
            Self::NonPeriodicInput { .. } => "NonPeriodicInput",
            Self::SupRateNotBounded { .. } => "SupRateNotBounded",
            Self::NotEquicontinuousAtHorizon { .. } => "NotEquicontinuousAtHorizon",
            Self::PreimageSearchFailed { .. } => "PreimageSearchFailed",
            Self::NoConvergence { .. } => "NoConvergence",
            Self::EmptyA => "EmptyA",
            Self::OracleUnavailable(_) => "OracleUnavailable",
            Self::HypothesisFailed(_) => "HypothesisFailed",
            Self::ScheduleMismatch(_) => "ScheduleMismatch",
            Self::BudgetExceeded { .. } => "BudgetExceeded",
            Self::ConfigInvalid { .. } => "ConfigInvalid",
            Self::InvalidArgument(_) => "InvalidArgument",
            Self::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for ShadowError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
