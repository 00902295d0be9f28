use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r2: T,
}

/// Least squares of `ln y` on `ln x`.
///
/// `r2` is 1 when the `ln y` values have no spread (a flat fit is exact).
pub fn fit_slope<T: Real>(points: &[(T, T)]) -> Result<SlopeFit<T>> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { got: points.len() });
    }
    if points.iter().any(|&(x, y)| !(x > T::zero() && y > T::zero())) {
        return Err(Error::invalid("points", "log-log fit needs positive coordinates"));
    }
    let n = T::from_usize_lossy(points.len());
    let logs: Vec<(T, T)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = logs.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let (sxx, sxy, syy) = logs
        .iter()
        .fold((T::zero(), T::zero(), T::zero()), |(a, b, c), &(x, y)| {
            let (dx, dy) = (x - mx, y - my);
            (a + dx * dx, b + dx * dy, c + dy * dy)
        });
    if sxx == T::zero() {
        return Err(Error::invalid("points", "all x coordinates coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = logs.iter().fold(T::zero(), |s, &(x, y)| {
        let e = y - (intercept + slope * x);
        s + e * e
    });
    let r2 = if syy == T::zero() {
        T::one()
    } else {
        T::one() - ss_res / syy
    };
    Ok(SlopeFit { slope, intercept, r2 })
}
