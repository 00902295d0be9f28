//! Numerical lower-bound tools.
//!
//! Builds pairs of distributions whose functionals differ by at least `eps`
//! and measures how distinguishable they are: Wasserstein distances between
//! the pairs, and KL divergence after Gaussian smoothing, which is what a
//! learner observing noisy pulls actually faces.

pub mod bump;
pub mod grid;
pub mod pairs;
pub mod smoothing;
pub mod sweep;
pub mod wasserstein;

pub use bump::{bump_coefficients, BumpSpec};
pub use grid::{convolve_gaussian, kl_divergence, total_variation};
pub use pairs::{construct_pair, make_pair, ConstructionPair, PairKind};
pub use smoothing::{smoothed_cdf, smoothing_check, SmoothingCheck};
pub use sweep::{lab_sweep, logratio_sup, sigma_sweep, smooth_pair, LabRow, SigmaRule};
pub use wasserstein::{wasserstein2, wasserstein2_between, wasserstein_inf, wasserstein_inf_between};
