//! Uniform sampling: `n` arms, `m` pulls each, plug-in order-statistic estimate.

use std::cmp::Ordering;

use serde::Serialize;

use crate::env::{BanditEnv, RunningMean};
use crate::error::{Error, Result};
use crate::model::{true_functional, AssumptionParams, FunctionalKind, FunctionalSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Sample sizes with their leading constants.
    #[default]
    Theoretical,
    /// Same powers of `eps` and `delta`, every leading constant set to 1.
    UnitConstant,
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theoretical" => Ok(Self::Theoretical),
            "unit_constant" => Ok(Self::UnitConstant),
            other => Err(Error::config("schedule_mode", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub n: u64,
    pub m: u64,
    pub mode: ScheduleMode,
    pub eps: f64,
    pub delta: f64,
}

impl Schedule {
    pub fn budget(&self) -> u64 {
        self.n.saturating_mul(self.m)
    }
}

/// Ceiling that ignores relative rounding noise below 1e-9, so that e.g.
/// `10 * 2 / 0.1^2` yields 2000 and not 2001. Never below 1.
pub(crate) fn ceil_count(x: f64) -> u64 {
    if !(x > 1.0) {
        return 1;
    }
    let c = (x * (1.0 - 1e-9)).ceil();
    if c >= u64::MAX as f64 {
        u64::MAX
    } else {
        c as u64
    }
}

fn need(spec: &FunctionalSpec, value: Option<f64>, constant: &'static str) -> Result<f64> {
    match value {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(Error::MissingAssumption {
            functional: spec.to_string(),
            constant,
        }),
    }
}

fn positive(spec: &FunctionalSpec, value: f64, constant: &'static str) -> Result<f64> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(
            "params",
            format!("{spec}: constant {constant} must be positive, got {value}"),
        ))
    }
}

/// Sample sizes `(n, m)` guaranteeing an `(eps, delta)`-accurate plug-in estimate.
///
/// Logarithms are natural. Trimmed-mean constants: `C1 = 4 (c2 + 1) / c1`, `C2 = 28`.
pub fn offline_schedule(
    spec: &FunctionalSpec,
    eps: f64,
    delta: f64,
    params: &AssumptionParams,
    mode: ScheduleMode,
) -> Result<Schedule> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let unit = mode == ScheduleMode::UnitConstant;
    let (n, m) = match spec.kind() {
        FunctionalKind::Mean => {
            let c = need(spec, params.c, "c")?;
            let lead = if unit { 1.0 } else { 1.0 + c };
            (ceil_count(lead / (delta * eps * eps)), 1)
        }
        FunctionalKind::Quantile(_) => {
            let c1 = positive(spec, need(spec, params.c1, "c1")?, "c1")?;
            let c2 = need(spec, params.c2, "c2")?;
            let log = (1.0 / delta).ln();
            if unit {
                (ceil_count(log / (eps * eps)), ceil_count(1.0 / eps))
            } else {
                let ce = c1 * eps;
                (ceil_count(28.0 * log / (ce * ce)), ceil_count(4.0 * (c2 + 1.0) / ce))
            }
        }
        FunctionalKind::Maximum => {
            let c1 = positive(spec, need(spec, params.c1, "c1")?, "c1")?;
            let beta = positive(spec, need(spec, params.beta, "beta")?, "beta")?;
            let log = (2.0 / delta).ln();
            let n = if unit {
                ceil_count(eps.powf(-beta) * log)
            } else {
                ceil_count(2f64.powf(beta) * eps.powf(-beta) * log / c1)
            };
            let lead = if unit { 1.0 } else { 4.0 };
            let m = ceil_count(lead * (2.0 * n as f64 / delta).ln() / (eps * eps));
            (n, m)
        }
        FunctionalKind::Trimmed(_) => {
            let c1 = positive(spec, need(spec, params.c1, "c1")?, "c1")?;
            let c2 = need(spec, params.c2, "c2")?;
            let (big_c1, big_c2) = if unit {
                (1.0, 1.0)
            } else {
                (4.0 * (c2 + 1.0) / c1, 28.0)
            };
            let m = ceil_count(big_c1 * (1.0 / eps).ln() / eps);
            let n = ceil_count(big_c2 / (eps * eps * delta));
            (n, m)
        }
    };
    Ok(Schedule { n, m, mode, eps, delta })
}

/// `clamp(floor(alpha * n), 1, n)`, tolerant of `alpha * n` landing just below an integer.
pub fn order_index(alpha: f64, n: usize) -> usize {
    let raw = (alpha * n as f64 + 1e-9).floor();
    (raw.max(1.0) as usize).min(n.max(1))
}

fn sorted<T: Real>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

/// The two order-statistic anchors `(X_(floor(a1 n)), X_(floor(a2 n)))`.
pub fn anchors<T: Real>(values: &[T], alpha1: f64, alpha2: f64) -> Result<(T, T)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let s = sorted(values);
    let n = s.len();
    Ok((s[order_index(alpha1, n) - 1], s[order_index(alpha2, n) - 1]))
}

/// Indices `i` with `lo <= values[i] <= hi` (boundary ties included).
pub fn band<T: Real>(values: &[T], lo: T, hi: T) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= lo && v <= hi)
        .map(|(i, _)| i)
        .collect()
}

fn check_alphas(alpha1: f64, alpha2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha1) || !(0.0..=1.0).contains(&alpha2) || alpha1 > alpha2 {
        return Err(Error::invalid(
            "alpha",
            format!("need 0 <= alpha1 <= alpha2 <= 1, got ({alpha1}, {alpha2})"),
        ));
    }
    Ok(())
}

/// Mean of the values lying between the two order-statistic anchors.
///
/// Summation runs over the sorted values, so the result does not depend on
/// the input order.
pub fn plug_in_estimate<T: Real>(values: &[T], alpha1: f64, alpha2: f64) -> Result<T> {
    check_alphas(alpha1, alpha2)?;
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let s = sorted(values);
    let n = s.len();
    let (lo, hi) = (s[order_index(alpha1, n) - 1], s[order_index(alpha2, n) - 1]);
    let start = s.partition_point(|&v| v < lo);
    let end = s.partition_point(|&v| v <= hi);
    let slice = &s[start..end];
    let sum = slice.iter().fold(T::zero(), |acc, &v| acc + v);
    Ok(sum / T::from_usize_lossy(slice.len()))
}

/// Per-round record of the online algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRecord {
    pub r: u32,
    pub b_r: f64,
    pub t_r: u64,
    pub active: usize,
}

/// Outcome of one estimation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub functional: String,
    pub estimate: f64,
    pub truth: f64,
    pub abs_err: f64,
    /// Total pulls `M`.
    pub samples_total: u64,
    pub per_arm_counts: Vec<u64>,
    pub schedule: Schedule,
    pub seed: u64,
    /// Arms whose estimate fell between the anchors.
    pub selected: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<RoundRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn failed(&self, eps: f64) -> bool {
        !(self.abs_err <= eps)
    }
}

pub(crate) fn require_fresh(env: &BanditEnv) -> Result<()> {
    if env.arm_count() == 0 && env.total_pulls() == 0 {
        Ok(())
    } else {
        Err(Error::invalid("env", "estimation needs a fresh environment"))
    }
}

pub(crate) fn to_usize(n: u64, name: &'static str) -> Result<usize> {
    usize::try_from(n).map_err(|_| Error::invalid(name, format!("{n} arms do not fit in memory")))
}

/// Draws `n` arms, pulls each `m` times and applies [`plug_in_estimate`].
pub fn run_offline(env: &mut BanditEnv, spec: &FunctionalSpec, sched: &Schedule) -> Result<EstimateReport> {
    require_fresh(env)?;
    env.check_noise_contract()?;
    let truth = true_functional(env.dist(), spec)?;
    let n = to_usize(sched.n, "n")?;
    let mut means = Vec::with_capacity(n);
    for _ in 0..n {
        let arm = env.new_arm();
        let mut acc = RunningMean::default();
        env.pull_into(arm, sched.m, &mut acc)?;
        means.push(acc.mean);
    }
    let estimate = plug_in_estimate(&means, spec.alpha1(), spec.alpha2())?;
    let (lo, hi) = anchors(&means, spec.alpha1(), spec.alpha2())?;
    let (total, per_arm) = env.stats();
    debug_assert_eq!(total, sched.budget());
    Ok(EstimateReport {
        functional: spec.to_string(),
        estimate,
        truth,
        abs_err: (estimate - truth).abs(),
        samples_total: total,
        per_arm_counts: per_arm,
        schedule: *sched,
        seed: env.seed(),
        selected: band(&means, lo, hi),
        rounds: Vec::new(),
        notes: Vec::new(),
    })
}
