use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::distribution::{parse_call, DistributionSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Mean,
    Quantile(f64),
    Maximum,
    Trimmed(f64),
}

/// `g(F) = E[X | F^{-1}(alpha1) <= X <= F^{-1}(alpha2)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalSpec {
    kind: FunctionalKind,
    alpha1: f64,
    alpha2: f64,
}

impl FunctionalSpec {
    pub fn mean() -> Self {
        Self {
            kind: FunctionalKind::Mean,
            alpha1: 0.0,
            alpha2: 1.0,
        }
    }

    pub fn quantile(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("quantile level must lie in (0, 1), got {alpha}"),
            ));
        }
        Ok(Self {
            kind: FunctionalKind::Quantile(alpha),
            alpha1: alpha,
            alpha2: alpha,
        })
    }

    pub fn median() -> Self {
        Self::quantile(0.5).expect("0.5 is a valid level")
    }

    pub fn maximum() -> Self {
        Self {
            kind: FunctionalKind::Maximum,
            alpha1: 1.0,
            alpha2: 1.0,
        }
    }

    pub fn trimmed(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::invalid(
                "alpha",
                format!("trimming level must lie in (0, 1/2), got {alpha}"),
            ));
        }
        Ok(Self {
            kind: FunctionalKind::Trimmed(alpha),
            alpha1: alpha,
            alpha2: 1.0 - alpha,
        })
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    /// Whether the estimator averages a single order statistic (`alpha1 == alpha2`).
    pub fn is_pointwise(&self) -> bool {
        self.alpha1 == self.alpha2
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FunctionalKind::Mean => write!(f, "mean"),
            FunctionalKind::Quantile(a) => write!(f, "quantile:{a}"),
            FunctionalKind::Maximum => write!(f, "maximum"),
            FunctionalKind::Trimmed(a) => write!(f, "trimmed:{a}"),
        }
    }
}

impl FromStr for FunctionalSpec {
    type Err = Error;

    /// Accepts `mean`, `median`, `maximum`, `quantile:0.3`, `trimmed:0.25`
    /// and the call forms `quantile(0.3)`, `trimmed(0.25)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: String| Error::config("functional", why);
        let norm = s.trim().to_ascii_lowercase();
        let (name, args) = match norm.split_once(':') {
            Some((n, a)) => {
                let v = a
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("cannot parse `{s}`")))?;
                (n.trim().to_string(), vec![v])
            }
            None => parse_call(&norm).ok_or_else(|| bad(format!("cannot parse `{s}`")))?,
        };
        let spec = match (name.as_str(), args.as_slice()) {
            ("mean", []) => Ok(Self::mean()),
            ("median", []) => Ok(Self::median()),
            ("maximum" | "max", []) => Ok(Self::maximum()),
            ("quantile", [a]) => Self::quantile(*a),
            ("trimmed" | "trimmed_mean", [a]) => Self::trimmed(*a),
            _ => return Err(bad(format!("unknown functional `{s}`"))),
        };
        spec.map_err(|e| bad(e.to_string()))
    }
}

/// Exact `g(F)` for a distribution.
pub fn true_functional(dist: &DistributionSpec, spec: &FunctionalSpec) -> Result<f64> {
    match spec.kind {
        FunctionalKind::Mean => Ok(dist.mean()),
        FunctionalKind::Quantile(a) => Ok(dist.quantile(a)),
        FunctionalKind::Maximum => {
            let top = dist.support_hi();
            if top.is_finite() {
                Ok(top)
            } else {
                Err(Error::UnboundedFunctional {
                    functional: spec.to_string(),
                })
            }
        }
        FunctionalKind::Trimmed(a) => Ok(dist.quantile_average(a, 1.0 - a)),
    }
}
