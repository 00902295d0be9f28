//! One-dimensional Wasserstein distances through quantile functions.

use crate::model::DistributionSpec;
use crate::quadrature::integrate_with_breaks;
use crate::scalar::Real;

/// `(int_0^1 (q1(u) - q2(u))^2 du)^{1/2}`, with panel breaks at `breaks` in `(0, 1)`.
pub fn wasserstein2<T: Real>(q1: impl Fn(T) -> T, q2: impl Fn(T) -> T, breaks: &[T]) -> T {
    let f = |u: T| {
        let d = q1(u) - q2(u);
        d * d
    };
    let tol = T::epsilon() * T::lit(16.0);
    let q = integrate_with_breaks(f, T::zero(), T::one(), breaks, tol, T::lit(1e-10));
    q.value.max(T::zero()).sqrt()
}

/// `sup_u |q1(u) - q2(u)|` over a dense grid in `(0, 1)`, refined around the maximiser.
pub fn wasserstein_inf<T: Real>(q1: impl Fn(T) -> T, q2: impl Fn(T) -> T) -> T {
    const CELLS: usize = 20_000;
    let diff = |u: T| (q1(u) - q2(u)).abs();
    let n = T::from_usize_lossy(CELLS);
    let mut best = T::zero();
    let mut best_u = T::lit(0.5);
    let consider = |u: T, best: &mut T, best_u: &mut T| {
        let v = diff(u);
        if v > *best {
            *best = v;
            *best_u = u;
        }
    };
    for i in 0..CELLS {
        let u = (T::from_usize_lossy(i) + T::lit(0.5)) / n;
        consider(u, &mut best, &mut best_u);
    }
    // the extreme quantiles are where atoms and tails differ most
    for e in 1..=30 {
        let t = T::lit(10f64.powf(-(e as f64) / 2.0));
        if t > T::zero() && t < T::one() {
            consider(t, &mut best, &mut best_u);
            consider(T::one() - t, &mut best, &mut best_u);
        }
    }
    // golden-section refinement inside the neighbouring cells
    let width = T::one() / n;
    let mut a = (best_u - width).max(T::epsilon());
    let mut b = (best_u + width).min(T::one() - T::epsilon());
    let g = T::lit(0.5 * (5f64.sqrt() - 1.0));
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if diff(c) > diff(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(diff(T::lit(0.5) * (a + b)))
}

fn quantile_breaks(d1: &DistributionSpec, d2: &DistributionSpec) -> Vec<f64> {
    let mut breaks: Vec<f64> = d1
        .breaks()
        .into_iter()
        .map(|x| d1.cdf(x))
        .chain(d2.breaks().into_iter().map(|x| d2.cdf(x)))
        .chain(d1.breaks().into_iter().map(|x| d2.cdf(x)))
        .chain(d2.breaks().into_iter().map(|x| d1.cdf(x)))
        .filter(|u| *u > 0.0 && *u < 1.0)
        .collect();
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    breaks
}

/// [`wasserstein2`] between two distributions.
pub fn wasserstein2_between(d1: &DistributionSpec, d2: &DistributionSpec) -> f64 {
    wasserstein2(|u| d1.quantile(u), |u| d2.quantile(u), &quantile_breaks(d1, d2))
}

/// [`wasserstein_inf`] between two distributions.
pub fn wasserstein_inf_between(d1: &DistributionSpec, d2: &DistributionSpec) -> f64 {
    wasserstein_inf(|u| d1.quantile(u), |u| d2.quantile(u))
}
