//! Densities tabulated on uniform grids: Gaussian smoothing, KL and TV.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Kernel reach in standard deviations for grid convolution.
pub const KERNEL_REACH: f64 = 6.0;
/// Entries where both densities fall below this are skipped by divergences.
pub const SKIP_BELOW: f64 = 1e-12;
/// Density floor inside logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Cell averages of a density on `[lo, lo + step * values.len()]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    lo: T,
    step: T,
    values: Vec<T>,
}

impl<T: Real> DensityGrid<T> {
    pub fn new(lo: T, step: T, values: Vec<T>) -> Result<Self> {
        if !(step > T::zero()) || !lo.is_finite() {
            return Err(Error::invalid(
                "step",
                format!("grid needs a finite origin and positive step, got {lo}, {step}"),
            ));
        }
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::invalid("values", "densities must be finite and nonnegative"));
        }
        Ok(Self { lo, step, values })
    }

    /// Grid of `cells` cells on `[lo, hi]` holding `(F(x_{i+1}) - F(x_i)) / step`.
    pub fn from_cdf(lo: T, hi: T, cells: usize, cdf: impl Fn(T) -> T) -> Result<Self> {
        if cells == 0 || !(hi > lo) {
            return Err(Error::invalid("cells", "need at least one cell and lo < hi"));
        }
        let step = (hi - lo) / T::from_usize_lossy(cells);
        let edge = |i: usize| {
            if i == cells {
                hi
            } else {
                lo + step * T::from_usize_lossy(i)
            }
        };
        let mut prev = cdf(lo);
        let mut values = Vec::with_capacity(cells);
        for i in 1..=cells {
            let next = cdf(edge(i));
            values.push(((next - prev) / step).max(T::zero()));
            prev = next;
        }
        Self::new(lo, step, values)
    }

    /// Grid of `cells` cells on `[lo, hi]` holding `f` at the cell midpoints.
    pub fn from_fn(lo: T, hi: T, cells: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if cells == 0 || !(hi > lo) {
            return Err(Error::invalid("cells", "need at least one cell and lo < hi"));
        }
        let step = (hi - lo) / T::from_usize_lossy(cells);
        let values = (0..cells)
            .map(|i| f(lo + step * (T::from_usize_lossy(i) + T::lit(0.5))))
            .collect();
        Self::new(lo, step, values)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.lo + self.step * T::from_usize_lossy(self.values.len())
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn center(&self, i: usize) -> T {
        self.lo + self.step * (T::from_usize_lossy(i) + T::lit(0.5))
    }

    pub fn mass(&self) -> T {
        self.values.iter().fold(T::zero(), |s, &v| s + v) * self.step
    }

    /// Rescales to unit mass.
    pub fn normalized(mut self) -> Result<Self> {
        let mass = self.mass();
        if !(mass > T::zero()) {
            return Err(Error::invalid("values", "grid carries no mass"));
        }
        for v in &mut self.values {
            *v = *v / mass;
        }
        Ok(self)
    }

    pub fn aligned_with(&self, other: &Self) -> Result<()> {
        let tol = self.step * T::lit(1e-9);
        if self.values.len() != other.values.len()
            || (self.step - other.step).abs() > tol
            || (self.lo - other.lo).abs() > tol
        {
            return Err(Error::MisalignedGrids {
                reason: format!(
                    "[{}, step {}, {} cells] vs [{}, step {}, {} cells]",
                    self.lo,
                    self.step,
                    self.values.len(),
                    other.lo,
                    other.step,
                    other.values.len()
                ),
            });
        }
        Ok(())
    }
}

/// Discrete Gaussian kernel on offsets `-pad..=pad` cells.
///
/// Returns the weights (summing to one) and the mass the truncated, sampled
/// kernel carried before renormalisation.
pub fn gaussian_kernel<T: Real>(step: T, sigma: T, reach: T) -> (Vec<T>, T) {
    let pad = (reach * sigma / step).ceil().to_usize().unwrap_or(0);
    let norm = T::one() / (sigma * (T::lit(2.0) * T::PI()).sqrt());
    let mut w: Vec<T> = (0..=2 * pad)
        .map(|j| {
            let x = (T::from_usize_lossy(j) - T::from_usize_lossy(pad)) * step / sigma;
            norm * (-T::lit(0.5) * x * x).exp() * step
        })
        .collect();
    let mass = w.iter().fold(T::zero(), |s, &v| s + v);
    for v in &mut w {
        *v = *v / mass;
    }
    (w, mass)
}

/// Full discrete convolution of signed cell values with `kernel`; the output
/// is `kernel.len() - 1` cells longer, starting `pad` cells to the left.
/// Zero input cells are skipped.
pub fn convolve_values<T: Real>(values: &[T], kernel: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); values.len() + kernel.len() - 1];
    for (i, &v) in values.iter().enumerate() {
        if v == T::zero() {
            continue;
        }
        for (slot, &k) in out[i..i + kernel.len()].iter_mut().zip(kernel) {
            *slot = *slot + v * k;
        }
    }
    out
}

/// Mass bookkeeping of one convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convolution<T> {
    /// Mass of the sampled, truncated kernel before renormalisation.
    pub kernel_mass: T,
    /// Output mass before the final renormalisation.
    pub raw_mass: T,
}

/// `p * N(0, sigma^2)` on a grid extended by `6 sigma` on each side.
pub fn convolve_gaussian<T: Real>(p: &DensityGrid<T>, sigma: T) -> Result<DensityGrid<T>> {
    convolve_gaussian_with_report(p, sigma).map(|(g, _)| g)
}

pub fn convolve_gaussian_with_report<T: Real>(
    p: &DensityGrid<T>,
    sigma: T,
) -> Result<(DensityGrid<T>, Convolution<T>)> {
    if !(sigma > T::zero()) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let limit = sigma / T::lit(8.0);
    if p.step > limit * T::lit(1.0 + 1e-12) {
        return Err(Error::GridTooCoarse {
            step: p.step.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let (kernel, kernel_mass) = gaussian_kernel(p.step, sigma, T::lit(KERNEL_REACH));
    let pad = (kernel.len() - 1) / 2;
    let values = convolve_values(&p.values, &kernel);
    let out = DensityGrid {
        lo: p.lo - p.step * T::from_usize_lossy(pad),
        step: p.step,
        values: values.into_iter().map(|v| v.max(T::zero())).collect(),
    };
    let raw_mass = out.mass() / p.mass();
    Ok((out.normalized()?, Convolution { kernel_mass, raw_mass }))
}

// (1 + r) ln(1 + r) - r, accurate for small r.
fn bregman_log<T: Real>(r: T) -> T {
    if r.abs() < T::lit(1e-3) {
        // sum_{k>=2} (-r)^k / (k (k - 1))
        let mut term = r * r;
        let mut sum = T::zero();
        for k in 2..10 {
            let kk = T::from_usize_lossy(k);
            sum = sum + term / (kk * (kk - T::one()));
            term = -term * r;
        }
        sum
    } else {
        (T::one() + r) * r.ln_1p() - r
    }
}

fn kl_core<T: Real>(step: T, cells: impl Iterator<Item = (T, T)>) -> T {
    let floor = T::lit(DENSITY_FLOOR);
    let skip = T::lit(SKIP_BELOW);
    let mut sum = T::zero();
    for (p, d) in cells {
        let q = p + d;
        if p < skip && q < skip {
            continue;
        }
        let q = q.max(floor);
        let p = p.max(floor);
        // p ln(p/q) - p + q = q * phi(p/q), phi(t) = t ln t - t + 1
        let r = (p - q) / q;
        sum = sum + q * bregman_log(r);
    }
    sum * step
}

/// `sum p ln(p / q) step` between aligned grids of unit mass.
///
/// Evaluated termwise as `p ln(p/q) - p + q`, which adds zero in total but
/// keeps every term nonnegative.
pub fn kl_divergence<T: Real>(p: &DensityGrid<T>, q: &DensityGrid<T>) -> Result<T> {
    p.aligned_with(q)?;
    Ok(kl_core(
        p.step,
        p.values.iter().zip(&q.values).map(|(&a, &b)| (a, b - a)),
    ))
}

/// `KL(p || p + d)` where `d` is a signed, mass-free perturbation known to full precision.
pub fn kl_divergence_from_difference<T: Real>(p: &DensityGrid<T>, d: &[T]) -> Result<T> {
    if d.len() != p.values.len() {
        return Err(Error::MisalignedGrids {
            reason: format!("{} density cells vs {} perturbation cells", p.values.len(), d.len()),
        });
    }
    Ok(kl_core(p.step, p.values.iter().copied().zip(d.iter().copied())))
}

/// `sup |ln(p / q)|` over cells where either density exceeds the skip threshold.
pub fn log_ratio_sup<T: Real>(p: &DensityGrid<T>, d: &[T]) -> Result<T> {
    if d.len() != p.values.len() {
        return Err(Error::MisalignedGrids {
            reason: format!("{} density cells vs {} perturbation cells", p.values.len(), d.len()),
        });
    }
    let skip = T::lit(SKIP_BELOW);
    let floor = T::lit(DENSITY_FLOOR);
    let mut sup = T::zero();
    for (&a, &b) in p.values.iter().zip(d) {
        let q = a + b;
        if a < skip && q < skip {
            continue;
        }
        let r = (b / a.max(floor)).ln_1p().abs();
        sup = sup.max(r);
    }
    Ok(sup)
}

/// Total variation `1/2 sum |p - q| step`.
pub fn total_variation<T: Real>(p: &DensityGrid<T>, q: &DensityGrid<T>) -> Result<T> {
    p.aligned_with(q)?;
    let s = p
        .values
        .iter()
        .zip(&q.values)
        .fold(T::zero(), |s, (&a, &b)| s + (a - b).abs());
    Ok(T::lit(0.5) * s * p.step)
}

/// Removes from `values[range]` its components along polynomials of degree
/// `<= degree` in the cell index (discrete least squares), so the discrete
/// moments of orders `0..=degree` vanish to rounding.
pub fn project_out_moments<T: Real>(values: &mut [T], range: std::ops::Range<usize>, degree: usize) {
    let len = range.len();
    if len == 0 {
        return;
    }
    let mid = T::from_usize_lossy(len - 1) * T::lit(0.5);
    let scale = if len > 1 { mid } else { T::one() };
    let xs: Vec<T> = (0..len).map(|i| (T::from_usize_lossy(i) - mid) / scale).collect();
    // orthonormal basis by modified Gram-Schmidt, run twice for stability
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(degree + 1);
    let mut power = vec![T::one(); len];
    for _ in 0..=degree.min(len - 1) {
        let mut v = power.clone();
        for _ in 0..2 {
            for b in &basis {
                let dot = v.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = *x - dot * y;
                }
            }
        }
        let norm = v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt();
        if norm > T::zero() {
            for x in &mut v {
                *x = *x / norm;
            }
            basis.push(v);
        }
        for (p, &x) in power.iter_mut().zip(&xs) {
            *p = *p * x;
        }
    }
    let slice = &mut values[range];
    for _ in 0..2 {
        for b in &basis {
            let dot = slice.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
            for (x, &y) in slice.iter_mut().zip(b) {
                *x = *x - dot * y;
            }
        }
    }
}
