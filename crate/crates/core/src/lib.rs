//! Functional estimation in the infinite-armed bandit model.
//!
//! Arms arrive with hidden means drawn from an unknown distribution `F`; every
//! pull returns the arm's mean plus Gaussian noise. The crate estimates
//! indicator-based functionals `g(F) = E[X | F^{-1}(a1) <= X <= F^{-1}(a2)]`
//! (mean, quantiles, maximum, trimmed mean) with
//!
//! * [`offline`]: uniform sampling, `n` arms times `m` pulls, plug-in estimate;
//! * [`online`]: round-based elimination around the order-statistic anchors;
//! * [`lab`]: numerical lower-bound tools (Wasserstein distances, moment-matched
//!   bumps, Gaussian smoothing and KL quadrature);
//! * [`harness`]: epsilon sweeps, slope fits and CSV/JSON reports.
//!
//! Numeric kernels are generic over [`scalar::Real`]; the estimators and the
//! environment work in `f64` (see the aliases below).

pub mod env;
pub mod error;
pub mod harness;
pub mod lab;
pub mod model;
pub mod offline;
pub mod online;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use env::{BanditEnv, NoiseMode, RunningMean};
pub use error::{Error, Result};
pub use model::{
    check_assumptions, true_functional, AssumptionParams, DistributionSpec, FunctionalKind, FunctionalSpec,
};
pub use offline::{offline_schedule, plug_in_estimate, run_offline, EstimateReport, Schedule, ScheduleMode};
pub use online::{round_schedule, run_online, update_active_set};

/// Density grid over `f64`.
pub type DensityGrid = lab::grid::DensityGrid<f64>;
/// Quadrature result over `f64`.
pub type Quadrature = quadrature::Quadrature<f64>;
