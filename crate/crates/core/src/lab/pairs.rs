//! Pairs of distributions that are hard to tell apart yet differ in a functional.

use serde::Serialize;

use super::bump::BumpSpec;
use crate::error::{Error, Result};
use crate::model::{true_functional, DistributionSpec, FunctionalSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PairKind {
    /// Point masses at `1/2 - eps` and `1/2 + eps`.
    MeanDirac,
    /// Beta tail versus the same tail with its top pushed down by a cubic.
    MaxW2 { beta: f64 },
    /// Beta tail versus its copy shifted down by `eps`.
    MaxWinf { beta: f64 },
    /// Beta tail truncated at `1 - eps` versus the full tail.
    MaxKl { beta: f64 },
    /// Uniform on `[-1, 1]` versus the same plus an order-`k` bump at 0.
    MedianPair { k: usize },
    /// Uniform on `[1, 2]` versus the same plus an order-`k` bump at `1 + alpha`.
    TrimmedPair { k: usize, alpha: f64 },
}

impl PairKind {
    pub fn name(&self) -> &'static str {
        match self {
            PairKind::MeanDirac => "mean_dirac",
            PairKind::MaxW2 { .. } => "max_w2",
            PairKind::MaxWinf { .. } => "max_winf",
            PairKind::MaxKl { .. } => "max_kl",
            PairKind::MedianPair { .. } => "median_pair",
            PairKind::TrimmedPair { .. } => "trimmed_pair",
        }
    }

    /// Moment-matching order for bump pairs, 0 otherwise.
    pub fn order(&self) -> usize {
        match self {
            PairKind::MedianPair { k } | PairKind::TrimmedPair { k, .. } => *k,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConstructionPair {
    pub kind: PairKind,
    pub eps: f64,
    pub f1: DistributionSpec,
    pub f2: DistributionSpec,
    /// Functional the pair separates.
    pub functional: FunctionalSpec,
    /// `|g(F1) - g(F2)|`, computed from the two distributions.
    pub gap: f64,
}

impl ConstructionPair {
    pub fn bump(&self) -> Option<&BumpSpec> {
        self.f2.bump()
    }
}

/// Builds the pair of `kind` at scale `eps` and verifies that its functional gap is at least `eps`.
pub fn make_pair(kind: PairKind, eps: f64) -> Result<ConstructionPair> {
    let pair = construct_pair(kind, eps)?;
    if pair.gap < eps * (1.0 - 1e-9) {
        return Err(Error::GapTooSmall { eps, gap: pair.gap });
    }
    Ok(pair)
}

/// Builds the pair of `kind` at scale `eps` and reports its functional gap without checking it.
///
/// The trimmed pair moves the cdf by `O(eps)` on a window of half-width
/// `sqrt(16 eps)`, and the bump's vanishing first moment cancels the leading
/// `O(eps^1.5)` area, so its gap is `O(eps^2)` and fails the check in [`make_pair`].
pub fn construct_pair(kind: PairKind, eps: f64) -> Result<ConstructionPair> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
    }
    let too_large = |reason: String| Error::EpsTooLarge { eps, reason };
    let (f1, f2, functional) = match kind {
        PairKind::MeanDirac => (
            DistributionSpec::dirac(0.5 - eps)?,
            DistributionSpec::dirac(0.5 + eps)?,
            FunctionalSpec::mean(),
        ),
        PairKind::MaxW2 { beta } => {
            if 2.0 * eps > 1.0 {
                return Err(too_large("the cubic cap needs 2 eps <= 1".into()));
            }
            (
                DistributionSpec::beta_tail(beta)?,
                DistributionSpec::capped_beta_tail(beta, eps)?,
                FunctionalSpec::maximum(),
            )
        }
        PairKind::MaxWinf { beta } => (
            DistributionSpec::beta_tail(beta)?,
            DistributionSpec::shifted_beta_tail(beta, -eps)?,
            FunctionalSpec::maximum(),
        ),
        PairKind::MaxKl { beta } => {
            if eps >= 1.0 {
                return Err(too_large("truncation point 1 - eps must stay in (0, 1)".into()));
            }
            (
                DistributionSpec::truncated_beta_tail(beta, eps)?,
                DistributionSpec::beta_tail(beta)?,
                FunctionalSpec::maximum(),
            )
        }
        PairKind::MedianPair { k } => {
            // smoothness constant chosen equal to the bump's Lipschitz constant:
            // the perturbation is the bump itself at scale eps
            let bump = BumpSpec::new(k, eps)?;
            let f1 = DistributionSpec::uniform(-1.0, 1.0)?;
            let f2 = DistributionSpec::perturbed_uniform(-1.0, 1.0, bump, 0.0, 1.0)?;
            (f1, f2, FunctionalSpec::median())
        }
        PairKind::TrimmedPair { k, alpha } => {
            let spec = FunctionalSpec::trimmed(alpha)?;
            let bump = BumpSpec::new(k, 1.0)?;
            // b' = max(b / c2, 4) with c2 = b
            let b_prime: f64 = 4.0;
            let eps1 = 4.0 * b_prime * eps;
            let bump = bump.with_eps(eps1)?;
            if eps1.sqrt() > alpha.min(1.0 - 2.0 * alpha) {
                return Err(too_large(format!(
                    "bump half-width {} exceeds min(alpha, 1 - 2 alpha) = {}",
                    eps1.sqrt(),
                    alpha.min(1.0 - 2.0 * alpha)
                )));
            }
            let f1 = DistributionSpec::uniform(1.0, 2.0)?;
            let f2 = DistributionSpec::perturbed_uniform(1.0, 2.0, bump, 1.0 + alpha, 1.0 / b_prime)?;
            (f1, f2, spec)
        }
    };
    let gap = (true_functional(&f1, &functional)? - true_functional(&f2, &functional)?).abs();
    Ok(ConstructionPair {
        kind,
        eps,
        f1,
        f2,
        functional,
        gap,
    })
}
