//! Distance between a cdf and its Gaussian smoothing `F_m = F * N(0, 1/m)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DistributionSpec;
use crate::quadrature::integrate_with_breaks;
use crate::special::normal_pdf;

const REACH: f64 = 12.0;

/// `F_m(x) = int F(x - y) phi_{1/m}(y) dy`.
pub fn smoothed_cdf(dist: &DistributionSpec, x: f64, m: f64) -> f64 {
    let s = 1.0 / m.sqrt();
    // y = s z; kinks of F sit at z = (x - kink) / s
    let mut kinks = dist.breaks();
    kinks.extend(
        [dist.support_lo(), dist.support_hi()]
            .into_iter()
            .filter(|v| v.is_finite()),
    );
    let breaks: Vec<f64> = kinks.iter().map(|k| (x - k) / s).collect();
    integrate_with_breaks(
        |z| dist.cdf(x - s * z) * normal_pdf(z),
        -REACH,
        REACH,
        &breaks,
        1e-15,
        1e-13,
    )
    .value
}

/// Half-width of the window on which the bound needs a bounded density slope.
pub fn window_half_width(m: f64) -> f64 {
    (4.0 * (2.0 * m.sqrt()).ln()).sqrt() / m.sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingCheck {
    pub m: f64,
    /// `sup |F_m(x) - F(x)|` over the checked points.
    pub sup_diff: f64,
    /// Largest `(c2(x) + 1) / (2m)` slack violation; `<= 0` when the bound holds everywhere.
    pub worst_excess: f64,
    /// `max |p'|` over all windows.
    pub c2: f64,
    pub bound: f64,
    pub points: usize,
}

/// Checks `|F_m(x) - F(x)| <= (c2 + 1) / (2m)` on `points` abscissae whose
/// window `[x - t, x + t]` stays inside the support, with `c2` the largest
/// `|p'|` on that window.
pub fn smoothing_check(dist: &DistributionSpec, m: f64, points: usize) -> Result<SmoothingCheck> {
    if !(m > 0.0) || points < 2 {
        return Err(Error::invalid("m", "need m > 0 and at least two points"));
    }
    let t = window_half_width(m);
    let (lo, hi) = (dist.support_lo() + t, dist.support_hi() - t);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(
            "m",
            format!("no x has its window of half-width {t} inside the support"),
        ));
    }
    let slope_scan = |a: f64, b: f64| {
        let cells = 2000;
        (0..=cells)
            .map(|i| {
                let x = a + (b - a) * i as f64 / cells as f64;
                dist.pdf_derivative(x).map(f64::abs).unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    };
    let mut sup_diff: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut c2_all: f64 = 0.0;
    let mut bound_at_worst = 0.0;
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let diff = (smoothed_cdf(dist, x, m) - dist.cdf(x)).abs();
        let c2 = slope_scan(x - t, x + t);
        let bound = (c2 + 1.0) / (2.0 * m);
        c2_all = c2_all.max(c2);
        sup_diff = sup_diff.max(diff);
        if diff - bound > worst_excess {
            worst_excess = diff - bound;
            bound_at_worst = bound;
        }
    }
    Ok(SmoothingCheck {
        m,
        sup_diff,
        worst_excess,
        c2: c2_all,
        bound: bound_at_worst,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_interior_is_unchanged() {
        let u = DistributionSpec::uniform(-1.0, 1.0).unwrap();
        let v = smoothed_cdf(&u, 0.1, 400.0);
        assert!((v - u.cdf(0.1)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_smoothing_is_a_wider_gaussian() {
        let g = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        let m = 4.0f64;
        let wide = DistributionSpec::gaussian(0.0, (1.0 + 1.0 / m).sqrt()).unwrap();
        for x in [-1.0, 0.3, 2.0] {
            assert!((smoothed_cdf(&g, x, m) - wide.cdf(x)).abs() < 1e-12);
        }
    }
}
