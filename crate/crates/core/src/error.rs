use thiserror::Error;

/// Every failure the estimators, the lab and the harness can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("functional `{functional}` is undefined for a distribution with unbounded support")]
    UnboundedFunctional { functional: String },

    #[error("schedule for `{functional}` needs assumption constant `{constant}`")]
    MissingAssumption { functional: String, constant: &'static str },

    #[error("arm {arm} does not exist (environment holds {arms} arms)")]
    UnknownArm { arm: usize, arms: usize },

    #[error("input is empty")]
    EmptyInput,

    #[error("round schedule needs m >= 2, got m = {m}")]
    DegenerateM { m: u64 },

    #[error("linear system for the order-{k} bump is singular")]
    SingularSystem { k: usize },

    #[error("eps = {eps} is too large for this construction: {reason}")]
    EpsTooLarge { eps: f64, reason: String },

    #[error("pair separates its functional by only {gap}, less than eps = {eps}")]
    GapTooSmall { eps: f64, gap: f64 },

    #[error("grid step {step} is coarser than sigma/8 = {limit}")]
    GridTooCoarse { step: f64, limit: f64 },

    #[error("density grids are not aligned: {reason}")]
    MisalignedGrids { reason: String },

    #[error("slope fit needs at least 3 points, got {got}")]
    TooFewPoints { got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("noise_sd = {noise_sd} is not 0 or 1; schedules assume unit-variance noise (set the override to proceed)")]
    NonUnitNoise { noise_sd: f64 },

    #[error("selected arm set is empty")]
    EmptySelection,

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
