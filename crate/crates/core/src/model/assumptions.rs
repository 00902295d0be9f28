//! Regularity constants used by the sample-size schedules.
//!
//! Constants are measured on neighbourhoods of the relevant quantiles: radius
//! `10 * eps` for density lower/upper bounds and `10 * sqrt(eps)` for the
//! density-derivative bound. Neighbourhoods are clipped to the support.

use serde::Serialize;

use super::distribution::{DistributionSpec, Family};
use super::functional::{FunctionalKind, FunctionalSpec};

pub const DENSITY_RADIUS_FACTOR: f64 = 10.0;
pub const SMOOTHNESS_RADIUS_FACTOR: f64 = 10.0;
const MAX_SCAN_POINTS: usize = 200_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssumptionParams {
    /// Variance bound for the mean.
    pub c: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub beta: Option<f64>,
    /// Radius of the density clauses.
    pub validity_radius: f64,
    /// Radius of the density-derivative clauses.
    pub smoothness_radius: f64,
}

impl AssumptionParams {
    pub fn mean(c: f64) -> Self {
        Self {
            c: Some(c),
            ..Self::default()
        }
    }

    pub fn quantile(c1: f64, c2: f64) -> Self {
        Self {
            c1: Some(c1),
            c2: Some(c2),
            ..Self::default()
        }
    }

    pub fn maximum(c1: f64, c2: f64, beta: f64) -> Self {
        Self {
            c1: Some(c1),
            c2: Some(c2),
            beta: Some(beta),
            ..Self::default()
        }
    }

    pub fn trimmed(c: [f64; 6]) -> Self {
        Self {
            c0: Some(c[0]),
            c1: Some(c[1]),
            c2: Some(c[2]),
            c3: Some(c[3]),
            c4: Some(c[4]),
            c5: Some(c[5]),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub clause: &'static str,
    pub detail: String,
}

pub const CLAUSE_DENSITY_LOWER: &str = "F'(x) >= c1";
pub const CLAUSE_VARIANCE: &str = "Var[X] <= c";
pub const CLAUSE_SMOOTHNESS: &str = "|F''(x)| <= c2";
pub const CLAUSE_BOUNDED_TOP: &str = "F^{-1}(1) < inf";
pub const CLAUSE_BETA_REGULAR: &str = "c1 t^beta <= 1 - F(F^{-1}(1) - t) <= c2 t^beta";
pub const CLAUSE_QUANTILE_AWAY_FROM_ZERO: &str = "|F^{-1}(alpha)| >= c5 > 0";

fn violation(clause: &'static str, detail: impl Into<String>) -> Violation {
    Violation {
        clause,
        detail: detail.into(),
    }
}

/// Evaluates `f` on `[lo, hi]` with spacing at most `step` and returns `(min, max)`.
fn scan(lo: f64, hi: f64, step: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let cells = (((hi - lo) / step).ceil() as usize).clamp(1, MAX_SCAN_POINTS);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..=cells {
        let x = lo + (hi - lo) * i as f64 / cells as f64;
        let v = f(x);
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

fn clip(dist: &DistributionSpec, centre: f64, radius: f64) -> (f64, f64) {
    (
        (centre - radius).max(dist.support_lo()),
        (centre + radius).min(dist.support_hi()),
    )
}

struct LocalConstants {
    density_min: f64,
    density_max: f64,
    slope_max: f64,
}

fn local_constants(
    dist: &DistributionSpec,
    quantile: f64,
    eps: f64,
    violations: &mut Vec<Violation>,
) -> Option<LocalConstants> {
    if !dist.has_density() {
        violations.push(violation(
            CLAUSE_DENSITY_LOWER,
            format!("{dist} has no density near F^-1 = {quantile}"),
        ));
        return None;
    }
    let step = eps / 100.0;
    let r1 = DENSITY_RADIUS_FACTOR * eps;
    let r2 = SMOOTHNESS_RADIUS_FACTOR * eps.sqrt();
    let (a, b) = clip(dist, quantile, r1);
    let (density_min, density_max) = scan(a, b, step, |x| dist.pdf(x).unwrap_or(0.0));
    if density_min <= 0.0 || !density_min.is_finite() {
        violations.push(violation(
            CLAUSE_DENSITY_LOWER,
            format!("density drops to {density_min} within {r1} of {quantile}"),
        ));
    }
    let (a, b) = clip(dist, quantile, r2);
    let slope_max = match dist.pdf_derivative(quantile) {
        Some(_) => {
            let (lo, hi) = scan(a, b, step, |x| dist.pdf_derivative(x).unwrap_or(f64::NAN));
            lo.abs().max(hi.abs())
        }
        None => f64::NAN,
    };
    if !slope_max.is_finite() {
        violations.push(violation(
            CLAUSE_SMOOTHNESS,
            format!("density derivative unbounded or unavailable within {r2} of {quantile}"),
        ));
    }
    Some(LocalConstants {
        density_min,
        density_max,
        slope_max,
    })
}

fn beta_regularity(dist: &DistributionSpec, eps: f64) -> Result<(f64, f64, f64), Violation> {
    match dist.family() {
        Family::BetaTail { beta, .. } => return Ok((1.0, 1.0, *beta)),
        Family::Uniform { lo, hi } => {
            let c = 1.0 / (hi - lo);
            return Ok((c, c, 1.0));
        }
        _ => {}
    }
    let top = dist.support_hi();
    let width = top - dist.support_lo();
    let t_hi = (DENSITY_RADIUS_FACTOR * eps).min(0.5 * width);
    let t_lo = (eps / 100.0).min(t_hi / 10.0);
    if !(t_lo > 0.0) {
        return Err(violation(CLAUSE_BETA_REGULAR, format!("{dist} has no upper tail")));
    }
    const POINTS: usize = 64;
    let pts: Vec<(f64, f64)> = (0..POINTS)
        .map(|i| {
            let t = t_lo * (t_hi / t_lo).powf(i as f64 / (POINTS - 1) as f64);
            (t, 1.0 - dist.cdf(top - t))
        })
        .collect();
    if pts.iter().any(|&(_, tail)| !(tail > 0.0)) {
        return Err(violation(CLAUSE_BETA_REGULAR, "upper tail vanishes below the maximum"));
    }
    let n = POINTS as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| {
        let dx = t.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    let beta = sxy / sxx;
    if !(beta > 1e-6) {
        return Err(violation(
            CLAUSE_BETA_REGULAR,
            format!("fitted tail exponent {beta:.3e} is not positive"),
        ));
    }
    let ratios = pts.iter().map(|&(t, y)| y / t.powf(beta));
    let (c1, c2) = ratios.fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
    Ok((c1, c2, beta))
}

/// Measures the constants the schedule for `spec` needs, or lists the clauses that fail.
pub fn check_assumptions(
    dist: &DistributionSpec,
    spec: &FunctionalSpec,
    eps: f64,
) -> std::result::Result<AssumptionParams, Vec<Violation>> {
    let mut violations = Vec::new();
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(vec![violation("eps > 0", format!("got eps = {eps}"))]);
    }
    let mut params = AssumptionParams {
        validity_radius: DENSITY_RADIUS_FACTOR * eps,
        smoothness_radius: SMOOTHNESS_RADIUS_FACTOR * eps.sqrt(),
        ..AssumptionParams::default()
    };
    match spec.kind() {
        FunctionalKind::Mean => {
            let var = dist.variance();
            if var.is_finite() {
                params.c = Some(var);
            } else {
                violations.push(violation(CLAUSE_VARIANCE, "variance is not finite"));
            }
        }
        FunctionalKind::Quantile(alpha) => {
            let q = dist.quantile(alpha);
            if let Some(local) = local_constants(dist, q, eps, &mut violations) {
                params.c1 = Some(local.density_min);
                params.c2 = Some(local.slope_max);
            }
        }
        FunctionalKind::Maximum => {
            if !dist.support_hi().is_finite() {
                violations.push(violation(CLAUSE_BOUNDED_TOP, format!("{dist} is unbounded above")));
            } else {
                match beta_regularity(dist, eps) {
                    Ok((c1, c2, beta)) => {
                        params.c1 = Some(c1);
                        params.c2 = Some(c2);
                        params.beta = Some(beta);
                    }
                    Err(v) => violations.push(v),
                }
            }
        }
        FunctionalKind::Trimmed(alpha) => {
            let qa = dist.quantile(alpha);
            let qb = dist.quantile(1.0 - alpha);
            let lower = local_constants(dist, qa, eps, &mut violations);
            let upper = local_constants(dist, qb, eps, &mut violations);
            if let (Some(l), Some(u)) = (lower, upper) {
                params.c1 = Some(l.density_min.min(u.density_min));
                params.c2 = Some(l.slope_max.max(u.slope_max));
                params.c3 = Some(l.density_max.max(u.density_max));
            }
            params.c0 = Some(dist.variance() + dist.mean().powi(2));
            params.c4 = Some(qa.abs().max(qb.abs()));
            let c5 = qa.abs().min(qb.abs());
            if c5 > 0.0 {
                params.c5 = Some(c5);
            } else {
                violations.push(violation(
                    CLAUSE_QUANTILE_AWAY_FROM_ZERO,
                    format!("a trimming quantile sits at {c5}"),
                ));
            }
        }
    }
    if violations.is_empty() {
        Ok(params)
    } else {
        Err(violations)
    }
}
