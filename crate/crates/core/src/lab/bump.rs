//! Moment-matched antisymmetric bumps.
//!
//! On `[0, 1]` the profile is `h1(u) = sum_{i=1}^{k+2} a_i u^i`, extended
//! oddly to `[-1, 1]` and rescaled to `h(x) = sqrt(eps) * h0(x / sqrt(eps))`.
//! The coefficients solve
//!
//! ```text
//! sum a_i = 0,   sum a_i / (i + 1) = 1,   sum a_i / (2j + i) = 0   (j = 1..k)
//! ```
//!
//! exactly over the rationals. The monomial coefficients grow fast with `k`
//! (about 3e8 for k = 8), so evaluation goes through exact conversion to a
//! Chebyshev basis on `[0, 1]` and Clenshaw summation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Field;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Works for any [`Field`]: `BigRational` gives the exact solution, `f64` a
/// floating one. Returns `None` when a pivot vanishes.
pub fn solve_linear<T: Field>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].is_zero() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / a[col][col].clone();
            for c in col..n {
                let delta = factor.clone() * a[col][c].clone();
                a[row][c] = a[row][c].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[row] = b[row].clone() - delta;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for c in row + 1..n {
            acc = acc - a[row][c].clone() * x[c].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Some(x)
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Rows of the moment-matching system for order `k`, as `(matrix, rhs)`.
pub fn bump_system<T: Field>(k: usize, frac: impl Fn(i64, i64) -> T) -> (Vec<Vec<T>>, Vec<T>) {
    let size = k + 2;
    let mut rows = Vec::with_capacity(size);
    let mut rhs = Vec::with_capacity(size);
    rows.push((1..=size).map(|_| T::one()).collect());
    rhs.push(T::zero());
    rows.push((1..=size).map(|i| frac(1, i as i64 + 1)).collect());
    rhs.push(T::one());
    for j in 1..=k {
        rows.push((1..=size).map(|i| frac(1, (2 * j + i) as i64)).collect());
        rhs.push(T::zero());
    }
    (rows, rhs)
}

/// Exact coefficients `a_1..a_{k+2}` of the order-`k` bump profile.
pub fn bump_coefficients(k: usize) -> Result<Vec<BigRational>> {
    if k == 0 {
        return Err(Error::invalid("k", "moment-matching order must be at least 1"));
    }
    let (rows, rhs) = bump_system(k, rational);
    solve_linear(rows, rhs).ok_or(Error::SingularSystem { k })
}

/// Chebyshev series on `[0, 1]` evaluated with Clenshaw's recurrence.
#[derive(Debug, Clone)]
struct ChebSeries {
    coeffs: Vec<f64>,
}

impl ChebSeries {
    /// Converts `sum_i c_i x^i` (index = power) on `[0, 1]` exactly.
    fn from_monomials(mono: &[BigRational]) -> Self {
        let degree = mono.len().saturating_sub(1);
        let half = rational(1, 2);
        // x = (1 + t) / 2: expand into powers of t.
        let mut in_t = vec![BigRational::zero(); degree + 1];
        for (i, c) in mono.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let scale = c * pow(&half, i);
            for j in 0..=i {
                in_t[j] += &scale * BigRational::from_integer(binomial(i, j));
            }
        }
        // t^j = 2^{1-j} sum_l C(j, l) T_{j-2l}, halved for the T_0 term.
        let mut cheb = vec![BigRational::zero(); degree + 1];
        for (j, c) in in_t.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if j == 0 {
                cheb[0] += c;
                continue;
            }
            let lead = c * pow(&half, j - 1);
            for l in 0..=j / 2 {
                let order = j - 2 * l;
                let mut term = &lead * BigRational::from_integer(binomial(j, l));
                if order == 0 {
                    term *= &half;
                }
                cheb[order] += term;
            }
        }
        Self {
            coeffs: cheb.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let t = 2.0 * x - 1.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(0.0) + t * b1 - b2
    }
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// The order-`k` moment-matched bump at scale `eps`.
#[derive(Debug, Clone)]
pub struct BumpSpec {
    k: usize,
    eps: f64,
    exact: Vec<BigRational>,
    coeffs: Vec<f64>,
    lipschitz: f64,
    peak: f64,
    profile: ChebSeries,
    slope: ChebSeries,
    area: ChebSeries,
}

impl BumpSpec {
    pub fn new(k: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
        }
        let exact = bump_coefficients(k)?;
        let coeffs: Vec<f64> = exact.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect();
        let lipschitz = exact
            .iter()
            .enumerate()
            .map(|(i, a)| a.abs() * BigRational::from_integer(BigInt::from(i + 1)))
            .fold(BigRational::zero(), |s, x| s + x)
            .to_f64()
            .unwrap_or(f64::INFINITY);

        // monomial tables indexed by power
        let mut profile = vec![BigRational::zero()];
        profile.extend(exact.iter().cloned());
        let slope: Vec<BigRational> = profile
            .iter()
            .enumerate()
            .skip(1)
            .map(|(p, a)| a * BigRational::from_integer(BigInt::from(p)))
            .collect();
        let mut area = vec![BigRational::zero()];
        area.extend(
            profile
                .iter()
                .enumerate()
                .map(|(p, a)| a / BigRational::from_integer(BigInt::from(p + 1))),
        );

        let mut bump = Self {
            k,
            eps,
            exact,
            coeffs,
            lipschitz,
            peak: 0.0,
            profile: ChebSeries::from_monomials(&profile),
            slope: ChebSeries::from_monomials(&slope),
            area: ChebSeries::from_monomials(&area),
        };
        bump.peak = bump.locate_peak();
        Ok(bump)
    }

    /// Same profile, different scale.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
        }
        Ok(Self { eps, ..self.clone() })
    }

    fn locate_peak(&self) -> f64 {
        const SCAN: usize = 8192;
        let (mut best_u, mut best) = (0.0, 0.0);
        for i in 0..=SCAN {
            let u = i as f64 / SCAN as f64;
            let v = self.profile.eval(u).abs();
            if v > best {
                best = v;
                best_u = u;
            }
        }
        // golden-section polish on the bracketing cells
        let (mut a, mut b) = (
            (best_u - 1.0 / SCAN as f64).max(0.0),
            (best_u + 1.0 / SCAN as f64).min(1.0),
        );
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.profile.eval(c).abs() > self.profile.eval(d).abs() {
                b = d;
            } else {
                a = c;
            }
        }
        best.max(self.profile.eval(0.5 * (a + b)).abs())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `a_1..a_{k+2}` rounded to `f64`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn exact_coefficients(&self) -> &[BigRational] {
        &self.exact
    }

    /// `b = sum i |a_i|`: bounds `|h0|` and its Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `max |h0|`; the scaled bump peaks at `sqrt(eps) * peak`.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn half_width(&self) -> f64 {
        self.eps.sqrt()
    }

    /// Unscaled profile `h0` on `[-1, 1]`.
    pub fn profile(&self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        u.signum() * self.profile.eval(u.abs())
    }

    pub fn value(&self, x: f64) -> f64 {
        let w = self.half_width();
        w * self.profile(x / w)
    }

    /// Derivative of [`value`](Self::value); one-sided limits at the support edges are not
    /// distinguished (the interior value is returned for |x| < sqrt(eps)).
    pub fn derivative(&self, x: f64) -> f64 {
        let u = x / self.half_width();
        if u.abs() >= 1.0 {
            return 0.0;
        }
        self.slope.eval(u.abs())
    }

    /// `int_{-inf}^x h(t) dt`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let u = x / self.half_width();
        if u.abs() >= 1.0 {
            return 0.0;
        }
        self.eps * (self.area.eval(u.abs()) - 1.0)
    }

    /// Exact `int_{-1}^{1} u^l h0(u) du`.
    pub fn exact_profile_moment(&self, l: usize) -> BigRational {
        if l.is_multiple_of(2) {
            return BigRational::zero();
        }
        let two = BigRational::from_integer(BigInt::from(2));
        self.exact
            .iter()
            .enumerate()
            .map(|(i, a)| a / BigRational::from_integer(BigInt::from((l + i + 2) as i64)))
            .fold(BigRational::zero(), |s, x| s + x)
            * two
    }

    /// `int x^l h(x) dx = eps^{(l+2)/2} int u^l h0(u) du`, evaluated from the exact moments.
    pub fn moment(&self, l: usize) -> f64 {
        let m = self.exact_profile_moment(l).to_f64().unwrap_or(f64::NAN);
        self.eps.powf((l as f64 + 2.0) / 2.0) * m
    }
}
