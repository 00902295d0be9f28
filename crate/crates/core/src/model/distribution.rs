use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lab::bump::BumpSpec;
use crate::quadrature::integrate_with_breaks;
use crate::special::{normal_cdf, normal_pdf, normal_quantile};

const QUAD_ABS: f64 = 1e-14;
const QUAD_REL: f64 = 1e-13;

/// Parametric families of arm-mean distributions.
#[derive(Debug, Clone)]
pub enum Family {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Dirac {
        at: f64,
    },
    Gaussian {
        mu: f64,
        sd: f64,
    },
    /// `F(x) = 1 - (1 - (x - shift))^beta` on `[shift, 1 + shift]`.
    BetaTail {
        beta: f64,
        shift: f64,
    },
    /// Uniform density on `[lo, hi]` plus `scale * h(x - shift)`.
    PerturbedUniform {
        lo: f64,
        hi: f64,
        bump: Arc<BumpSpec>,
        shift: f64,
        scale: f64,
    },
    /// Beta tail conditioned on `X <= 1 - cut`.
    TruncatedBetaTail {
        beta: f64,
        cut: f64,
    },
    /// Beta tail whose top `2 eps` of `1 - X` is pushed through a monotone cubic,
    /// so the maximum drops to `1 - eps` while the quantile function moves by `O(eps)`
    /// only on a set of measure `(2 eps)^beta`.
    CappedBetaTail {
        beta: f64,
        eps: f64,
    },
}

/// A distribution `F` of hidden arm means with analytic cdf, quantile and density.
#[derive(Debug, Clone)]
pub struct DistributionSpec {
    family: Family,
    support_lo: f64,
    support_hi: f64,
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
    }
}

fn finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {x}")))
    }
}

impl DistributionSpec {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        finite("lo", lo)?;
        finite("hi", hi)?;
        if hi <= lo {
            return Err(Error::invalid("hi", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self {
            family: Family::Uniform { lo, hi },
            support_lo: lo,
            support_hi: hi,
        })
    }

    pub fn dirac(at: f64) -> Result<Self> {
        finite("at", at)?;
        Ok(Self {
            family: Family::Dirac { at },
            support_lo: at,
            support_hi: at,
        })
    }

    pub fn gaussian(mu: f64, sd: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sd", sd)?;
        Ok(Self {
            family: Family::Gaussian { mu, sd },
            support_lo: f64::NEG_INFINITY,
            support_hi: f64::INFINITY,
        })
    }

    pub fn beta_tail(beta: f64) -> Result<Self> {
        Self::shifted_beta_tail(beta, 0.0)
    }

    pub fn shifted_beta_tail(beta: f64, shift: f64) -> Result<Self> {
        positive("beta", beta)?;
        finite("shift", shift)?;
        Ok(Self {
            family: Family::BetaTail { beta, shift },
            support_lo: shift,
            support_hi: 1.0 + shift,
        })
    }

    pub fn truncated_beta_tail(beta: f64, cut: f64) -> Result<Self> {
        positive("beta", beta)?;
        if !(cut > 0.0 && cut < 1.0) {
            return Err(Error::invalid("cut", format!("must lie in (0, 1), got {cut}")));
        }
        Ok(Self {
            family: Family::TruncatedBetaTail { beta, cut },
            support_lo: 0.0,
            support_hi: 1.0 - cut,
        })
    }

    pub fn capped_beta_tail(beta: f64, eps: f64) -> Result<Self> {
        positive("beta", beta)?;
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::EpsTooLarge {
                eps,
                reason: "the cubic cap needs 2 eps <= 1".into(),
            });
        }
        Ok(Self {
            family: Family::CappedBetaTail { beta, eps },
            support_lo: 0.0,
            support_hi: 1.0 - eps,
        })
    }

    /// Uniform on `[lo, hi]` with density perturbed by `scale * h(x - shift)`.
    ///
    /// Fails with [`Error::EpsTooLarge`] when the bump leaves the support or the
    /// density would drop below 1/4.
    pub fn perturbed_uniform(lo: f64, hi: f64, bump: BumpSpec, shift: f64, scale: f64) -> Result<Self> {
        let base = Self::uniform(lo, hi)?;
        finite("shift", shift)?;
        finite("scale", scale)?;
        let w = bump.half_width();
        if shift - w < lo || shift + w > hi {
            return Err(Error::EpsTooLarge {
                eps: bump.eps(),
                reason: format!("bump support [{}, {}] leaves [{lo}, {hi}]", shift - w, shift + w),
            });
        }
        let floor = 1.0 / (hi - lo) - scale.abs() * w * bump.peak();
        if floor < 0.25 {
            return Err(Error::EpsTooLarge {
                eps: bump.eps(),
                reason: format!("density would dip to {floor:.4} < 1/4"),
            });
        }
        Ok(Self {
            family: Family::PerturbedUniform {
                lo,
                hi,
                bump: Arc::new(bump),
                shift,
                scale,
            },
            ..base
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support_lo(&self) -> f64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> f64 {
        self.support_hi
    }

    pub fn bump(&self) -> Option<&BumpSpec> {
        match &self.family {
            Family::PerturbedUniform { bump, .. } => Some(bump),
            _ => None,
        }
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.family, Family::Dirac { .. })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match &self.family {
            Family::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Dirac { at } => {
                if x >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Gaussian { mu, sd } => normal_cdf((x - mu) / sd),
            Family::BetaTail { beta, shift } => {
                let y = x - shift;
                if y <= 0.0 {
                    0.0
                } else if y >= 1.0 {
                    1.0
                } else {
                    -(beta * (-y).ln_1p()).exp_m1()
                }
            }
            Family::TruncatedBetaTail { beta, cut } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 - cut {
                    1.0
                } else {
                    let mass = -(beta * (-x).ln_1p()).exp_m1();
                    mass / (1.0 - cut.powf(*beta))
                }
            }
            Family::CappedBetaTail { beta, eps } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 - eps {
                    1.0
                } else {
                    1.0 - capped_inverse(1.0 - x, *eps).powf(*beta)
                }
            }
            Family::PerturbedUniform {
                lo,
                hi,
                bump,
                shift,
                scale,
            } => {
                if x <= *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    ((x - lo) / (hi - lo) + scale * bump.cumulative(x - shift)).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Density, or `None` for families without one.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        let inside = x >= self.support_lo && x <= self.support_hi;
        let v = match &self.family {
            Family::Dirac { .. } => return None,
            _ if !inside => 0.0,
            Family::Uniform { lo, hi } => 1.0 / (hi - lo),
            Family::Gaussian { mu, sd } => normal_pdf((x - mu) / sd) / sd,
            Family::BetaTail { beta, shift } => beta * (1.0 - (x - shift)).powf(beta - 1.0),
            Family::TruncatedBetaTail { beta, cut } => beta * (1.0 - x).powf(beta - 1.0) / (1.0 - cut.powf(*beta)),
            Family::CappedBetaTail { beta, eps } => {
                let y = 1.0 - x;
                let g = capped_inverse(y, *eps);
                beta * g.powf(beta - 1.0) / capped_slope(g, *eps)
            }
            Family::PerturbedUniform {
                lo,
                hi,
                bump,
                shift,
                scale,
            } => 1.0 / (hi - lo) + scale * bump.value(x - shift),
        };
        Some(v)
    }

    /// Derivative of the density where it is available in closed form.
    pub fn pdf_derivative(&self, x: f64) -> Option<f64> {
        let inside = x >= self.support_lo && x <= self.support_hi;
        let v = match &self.family {
            Family::Dirac { .. } | Family::CappedBetaTail { .. } => return None,
            _ if !inside => 0.0,
            Family::Uniform { .. } => 0.0,
            Family::Gaussian { mu, sd } => {
                let z = (x - mu) / sd;
                -z * normal_pdf(z) / (sd * sd)
            }
            Family::BetaTail { beta, shift } => -beta * (beta - 1.0) * (1.0 - (x - shift)).powf(beta - 2.0),
            Family::TruncatedBetaTail { beta, cut } => {
                -beta * (beta - 1.0) * (1.0 - x).powf(beta - 2.0) / (1.0 - cut.powf(*beta))
            }
            Family::PerturbedUniform { bump, shift, scale, .. } => scale * bump.derivative(x - shift),
        };
        Some(v)
    }

    /// Generalized inverse `inf { x : F(x) >= p }`, with `quantile(0) = support_lo`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.support_lo;
        }
        if p >= 1.0 {
            return self.support_hi;
        }
        match &self.family {
            Family::Uniform { lo, hi } => lo + p * (hi - lo),
            Family::Dirac { at } => *at,
            Family::Gaussian { mu, sd } => mu + sd * normal_quantile(p),
            Family::BetaTail { beta, shift } => shift - ((-p).ln_1p() / beta).exp_m1(),
            Family::TruncatedBetaTail { beta, cut } => {
                let scaled = p * (1.0 - cut.powf(*beta));
                -((-scaled).ln_1p() / beta).exp_m1()
            }
            Family::CappedBetaTail { beta, eps } => 1.0 - capped_forward((1.0 - p).powf(1.0 / beta), *eps),
            Family::PerturbedUniform { .. } => self.bisect_quantile(p),
        }
    }

    fn bisect_quantile(&self, p: f64) -> f64 {
        let (mut a, mut b) = (self.support_lo, self.support_hi);
        while b - a > 1e-13 * (1.0 + a.abs().max(b.abs())) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.cdf(mid) >= p {
                b = mid;
            } else {
                a = mid;
            }
        }
        b
    }

    /// Draws one value from `u` in `(0, 1)` by inversion.
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        self.quantile(u)
    }

    /// Points where the cdf or density has a kink, inside the support.
    pub fn breaks(&self) -> Vec<f64> {
        match &self.family {
            Family::PerturbedUniform { bump, shift, .. } => {
                let w = bump.half_width();
                vec![shift - w, *shift, shift + w]
            }
            Family::CappedBetaTail { eps, .. } => vec![1.0 - 2.0 * eps],
            _ => Vec::new(),
        }
    }

    /// `int_a^b F(x) dx` for finite `a <= b`.
    pub fn integrate_cdf(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        if let Family::Dirac { at } = self.family {
            return (b - at.max(a)).max(0.0);
        }
        let mut breaks = self.breaks();
        breaks.extend([self.support_lo, self.support_hi].into_iter().filter(|x| x.is_finite()));
        integrate_with_breaks(|x| self.cdf(x), a, b, &breaks, QUAD_ABS, QUAD_REL).value
    }

    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
            Family::Dirac { at } => *at,
            Family::Gaussian { mu, .. } => *mu,
            Family::BetaTail { beta, shift } => shift + 1.0 / (beta + 1.0),
            Family::PerturbedUniform {
                lo, hi, bump, scale, ..
            } => 0.5 * (lo + hi) + scale * bump.moment(1),
            _ => {
                let (lo, hi) = (self.support_lo, self.support_hi);
                hi - self.integrate_cdf(lo, hi)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.family {
            Family::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Family::Dirac { .. } => 0.0,
            Family::Gaussian { sd, .. } => sd * sd,
            Family::BetaTail { beta, .. } => beta / (beta + 2.0) - (beta / (beta + 1.0)).powi(2),
            _ => {
                // E[(X - lo)^2] = int 2 (x - lo) (1 - F(x)) dx on a bounded support
                let (lo, hi) = (self.support_lo, self.support_hi);
                let mut breaks = self.breaks();
                breaks.push(hi);
                let second = integrate_with_breaks(
                    |x| 2.0 * (x - lo) * (1.0 - self.cdf(x)),
                    lo,
                    hi,
                    &breaks,
                    QUAD_ABS,
                    QUAD_REL,
                )
                .value;
                (second - (self.mean() - lo).powi(2)).max(0.0)
            }
        }
    }

    /// `int_{a1}^{a2} F^{-1}(u) du / (a2 - a1)` for `a1 < a2`.
    ///
    /// Uses `int_a^b F^{-1} = b q(b) - a q(a) - int_{q(a)}^{q(b)} F`, which holds for
    /// any distribution and avoids quadrature over the quantile function.
    pub fn quantile_average(&self, a1: f64, a2: f64) -> f64 {
        debug_assert!(a1 < a2);
        if a1 <= 0.0 && a2 >= 1.0 {
            return self.mean();
        }
        let qa = if a1 <= 0.0 { f64::NAN } else { self.quantile(a1) };
        let qb = if a2 >= 1.0 { f64::NAN } else { self.quantile(a2) };
        let total = match (qa.is_nan(), qb.is_nan()) {
            (false, false) => a2 * qb - a1 * qa - self.integrate_cdf(qa, qb),
            // lower tail from the support start (bounded) or via the mean
            (true, false) => {
                let upper = (1.0 - a2) * qb + self.integrate_survival(qb);
                self.mean() - upper
            }
            (false, true) => {
                let lower = a1 * qa - self.integrate_cdf_left(qa);
                self.mean() - lower
            }
            (true, true) => unreachable!(),
        };
        total / (a2 - a1)
    }

    // int_{x}^{inf} (1 - F)
    fn integrate_survival(&self, x: f64) -> f64 {
        let hi = if self.support_hi.is_finite() {
            self.support_hi
        } else {
            x + 40.0 * self.spread()
        };
        (hi - x) - self.integrate_cdf(x, hi)
    }

    // int_{-inf}^{x} F
    fn integrate_cdf_left(&self, x: f64) -> f64 {
        let lo = if self.support_lo.is_finite() {
            self.support_lo
        } else {
            x - 40.0 * self.spread()
        };
        self.integrate_cdf(lo, x)
    }

    fn spread(&self) -> f64 {
        match &self.family {
            Family::Gaussian { sd, .. } => *sd,
            _ => (self.support_hi - self.support_lo).max(1.0),
        }
    }
}

// g1(s) = eps (2u^3 - 3u^2 + 2u + 1), u = s / (2 eps), on [0, 2 eps]; identity beyond.
fn capped_forward(s: f64, eps: f64) -> f64 {
    if s >= 2.0 * eps {
        return s;
    }
    let u = s / (2.0 * eps);
    eps * (((2.0 * u - 3.0) * u + 2.0) * u + 1.0)
}

// d g1 / ds = 3u^2 - 3u + 1 on the cubic part.
fn capped_slope(s: f64, eps: f64) -> f64 {
    if s >= 2.0 * eps {
        return 1.0;
    }
    let u = s / (2.0 * eps);
    (3.0 * u - 3.0) * u + 1.0
}

// Inverse of `capped_forward` on [eps, 1].
fn capped_inverse(y: f64, eps: f64) -> f64 {
    if y >= 2.0 * eps {
        return y;
    }
    if y <= eps {
        return 0.0;
    }
    let (mut a, mut b) = (0.0, 2.0 * eps);
    let mut s = y - eps;
    for _ in 0..100 {
        let f = capped_forward(s, eps) - y;
        if f.abs() <= 1e-16 * eps || b - a <= 1e-16 * eps {
            break;
        }
        if f > 0.0 {
            b = s;
        } else {
            a = s;
        }
        let next = s - f / capped_slope(s, eps);
        s = if next > a && next < b { next } else { 0.5 * (a + b) };
    }
    s
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Family::Dirac { at } => write!(f, "dirac({at})"),
            Family::Gaussian { mu, sd } => write!(f, "gaussian({mu},{sd})"),
            Family::BetaTail { beta, shift } if *shift == 0.0 => write!(f, "beta_tail({beta})"),
            Family::BetaTail { beta, shift } => write!(f, "beta_tail({beta},{shift})"),
            Family::TruncatedBetaTail { beta, cut } => write!(f, "truncated_beta_tail({beta},{cut})"),
            Family::CappedBetaTail { beta, eps } => write!(f, "capped_beta_tail({beta},{eps})"),
            Family::PerturbedUniform {
                lo,
                hi,
                bump,
                shift,
                scale,
            } => write!(
                f,
                "perturbed_uniform({lo},{hi},k={},eps={},shift={shift},scale={scale})",
                bump.k(),
                bump.eps()
            ),
        }
    }
}

/// Splits `name(a,b,...)` into the name and its numeric arguments.
pub(crate) fn parse_call(s: &str) -> Option<(String, Vec<f64>)> {
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Some((s.to_ascii_lowercase(), Vec::new()));
    };
    let inner = s[open + 1..].strip_suffix(')')?;
    let name = s[..open].trim().to_ascii_lowercase();
    if inner.trim().is_empty() {
        return Some((name, Vec::new()));
    }
    let args = inner
        .split(',')
        .map(|a| a.trim().parse::<f64>().ok())
        .collect::<Option<Vec<_>>>()?;
    Some((name, args))
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("distribution", format!("cannot parse `{s}`"));
        let (name, args) = parse_call(s).ok_or_else(bad)?;
        match (name.as_str(), args.as_slice()) {
            ("uniform", [lo, hi]) => Self::uniform(*lo, *hi),
            ("dirac", [at]) => Self::dirac(*at),
            ("gaussian", [mu, sd]) => Self::gaussian(*mu, *sd),
            ("beta_tail", [beta]) => Self::beta_tail(*beta),
            ("beta_tail", [beta, shift]) => Self::shifted_beta_tail(*beta, *shift),
            ("truncated_beta_tail", [beta, cut]) => Self::truncated_beta_tail(*beta, *cut),
            ("capped_beta_tail", [beta, eps]) => Self::capped_beta_tail(*beta, *eps),
            _ => Err(bad()),
        }
        .map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::config("distribution", other.to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let u = DistributionSpec::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.cdf(0.3), 0.3);
        assert_eq!(u.quantile(0.5), 0.5);
        let b = DistributionSpec::beta_tail(2.0).unwrap();
        assert!((b.cdf(0.5) - 0.75).abs() < 1e-15);
        assert!((b.quantile(0.75) - 0.5).abs() < 1e-15);
        let d = DistributionSpec::dirac(0.5).unwrap();
        assert_eq!(d.cdf(0.4), 0.0);
        assert_eq!(d.cdf(0.5), 1.0);
        assert_eq!(d.quantile(0.3), 0.5);
    }

    #[test]
    fn quantile_zero_is_support_start() {
        let b = DistributionSpec::beta_tail(3.0).unwrap();
        assert_eq!(b.quantile(0.0), 0.0);
        assert_eq!(b.quantile(1.0), 1.0);
        let g = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        assert_eq!(g.quantile(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn means_match_quadrature() {
        let b = DistributionSpec::beta_tail(2.0).unwrap();
        let generic = 1.0 - b.integrate_cdf(0.0, 1.0);
        assert!((b.mean() - generic).abs() < 1e-13);
        let t = DistributionSpec::truncated_beta_tail(2.0, 0.1).unwrap();
        // E[X | X <= 0.9] for density 2(1 - x)
        let num = 2.0 * (0.9f64.powi(2) / 2.0 - 0.9f64.powi(3) / 3.0);
        let den = 1.0 - 0.01;
        assert!((t.mean() - num / den).abs() < 1e-12);
    }

    #[test]
    fn variance_generic_path_matches_closed_form() {
        let b = DistributionSpec::beta_tail(2.0).unwrap();
        let capped_far = DistributionSpec::truncated_beta_tail(2.0, 1e-9).unwrap();
        assert!((b.variance() - capped_far.variance()).abs() < 1e-8);
        assert!((b.variance() - 1.0 / 18.0).abs() < 1e-14);
    }

    #[test]
    fn capped_tail_round_trip_and_top() {
        let c = DistributionSpec::capped_beta_tail(2.0, 0.1).unwrap();
        assert!((c.quantile(1.0 - 1e-15) - 0.9).abs() < 1e-6);
        for i in 1..200 {
            let p = i as f64 / 200.0;
            assert!((c.cdf(c.quantile(p)) - p).abs() < 1e-12, "p = {p}");
        }
        // identical to the plain tail below 1 - 2 eps
        let b = DistributionSpec::beta_tail(2.0).unwrap();
        assert!((c.cdf(0.7) - b.cdf(0.7)).abs() < 1e-15);
    }

    #[test]
    fn perturbed_uniform_density_floor_is_enforced() {
        let bump = BumpSpec::new(1, 1e-3).unwrap();
        assert!(DistributionSpec::perturbed_uniform(-1.0, 1.0, bump.clone(), 0.0, 1.0).is_ok());
        let big = bump.with_eps(0.01).unwrap();
        assert!(matches!(
            DistributionSpec::perturbed_uniform(-1.0, 1.0, big, 0.0, 1.0),
            Err(Error::EpsTooLarge { .. })
        ));
    }

    #[test]
    fn perturbed_uniform_quantile_inverts_cdf() {
        let bump = BumpSpec::new(2, 1e-3).unwrap();
        let d = DistributionSpec::perturbed_uniform(-1.0, 1.0, bump, 0.0, 1.0).unwrap();
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert!((d.cdf(d.quantile(p)) - p).abs() < 1e-12);
        }
        // mass eps moved from left of 0 to the right
        assert!((d.cdf(0.0) - (0.5 - 1e-3)).abs() < 1e-14);
    }

    #[test]
    fn parses_config_syntax() {
        let d: DistributionSpec = "uniform(0, 1)".parse().unwrap();
        assert_eq!(d.to_string(), "uniform(0,1)");
        let g: DistributionSpec = "gaussian(0.3,1)".parse().unwrap();
        assert_eq!(g.mean(), 0.3);
        assert!("uniform(1,0)".parse::<DistributionSpec>().is_err());
        assert!("weibull(2)".parse::<DistributionSpec>().is_err());
    }
}
