//! Round-based elimination around the order-statistic anchors.
//!
//! Round `r` uses the confidence width `b_r = 2^-r` and brings every active
//! arm up to `t_r` pulls. Arms farther than `b_r` from both anchors are
//! dropped and keep their last estimate. Once `t_r = m` the surviving band is
//! read off; interval functionals re-sample each selected arm once.

use std::collections::BTreeSet;

use crate::env::{BanditEnv, RunningMean};
use crate::error::{Error, Result};
use crate::model::{true_functional, AssumptionParams, FunctionalSpec};
use crate::offline::{
    anchors, band, ceil_count, offline_schedule, require_fresh, to_usize, EstimateReport, RoundRecord, ScheduleMode,
};

/// `ln m` inside the round lengths, floored at 1 for `m < 3`.
fn log_m(m: u64) -> f64 {
    (m as f64).ln().max(1.0)
}

/// `(b_r, t_r)` with `t_r = min(m, ceil(8 b_r^-2 ln(16 n ln m / delta)))`.
pub fn round_schedule(r: u32, n: u64, m: u64, delta: f64) -> Result<(f64, u64)> {
    round_schedule_with(r, n, m, delta, ScheduleMode::Theoretical)
}

/// As [`round_schedule`]; the unit-constant mode uses `ceil(b_r^-2 ln(n ln m / delta))`.
pub fn round_schedule_with(r: u32, n: u64, m: u64, delta: f64, mode: ScheduleMode) -> Result<(f64, u64)> {
    if r == 0 {
        return Err(Error::invalid("r", "rounds start at 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if m < 2 {
        return Err(Error::DegenerateM { m });
    }
    let b = 0.5f64.powi(r as i32);
    let inv_b2 = 4f64.powi(r as i32);
    let raw = match mode {
        ScheduleMode::Theoretical => 8.0 * inv_b2 * (16.0 * n as f64 * log_m(m) / delta).ln(),
        ScheduleMode::UnitConstant => inv_b2 * (n as f64 * log_m(m) / delta).ln(),
    };
    Ok((b, ceil_count(raw).min(m)))
}

/// Active arms within `b_r` of either anchor.
///
/// Anchors are order statistics of all arms' estimates, eliminated arms
/// contributing their frozen values. Eliminated arms never come back.
pub fn update_active_set(
    estimates: &[f64],
    active: &BTreeSet<usize>,
    b_r: f64,
    alpha1: f64,
    alpha2: f64,
) -> Result<BTreeSet<usize>> {
    let (a1, a2) = anchors(estimates, alpha1, alpha2)?;
    Ok(active
        .iter()
        .copied()
        .filter(|&i| {
            let v = estimates[i];
            (v - a1).abs() <= b_r || (v - a2).abs() <= b_r
        })
        .collect())
}

/// Runs the elimination algorithm with the schedule for `(eps / 2, delta / 2)`.
pub fn run_online(
    env: &mut BanditEnv,
    spec: &FunctionalSpec,
    eps: f64,
    delta: f64,
    params: &AssumptionParams,
    mode: ScheduleMode,
) -> Result<EstimateReport> {
    require_fresh(env)?;
    env.check_noise_contract()?;
    let truth = true_functional(env.dist(), spec)?;
    let sched = offline_schedule(spec, eps / 2.0, delta / 2.0, params, mode)?;
    let (n, m) = (sched.n, sched.m);
    let arms = to_usize(n, "n")?;
    let mut notes = Vec::new();
    if m < 2 {
        notes.push(format!("m = {m} < 2: a single round of {m} pull(s) per arm"));
    } else if m < 3 {
        notes.push("m < 3: ln m floored at 1 in the round lengths".to_string());
    }

    for _ in 0..arms {
        env.new_arm();
    }
    let mut acc = vec![RunningMean::default(); arms];
    let mut active: BTreeSet<usize> = (0..arms).collect();
    let mut rounds = Vec::new();
    let mut t_prev = 0u64;
    let mut r = 1u32;
    loop {
        let (b_r, t_r) = match round_schedule_with(r, n, m, delta, mode) {
            Ok(x) => x,
            Err(Error::DegenerateM { .. }) => (0.5f64.powi(r as i32), m),
            Err(e) => return Err(e),
        };
        let extra = t_r - t_prev;
        for &i in &active {
            env.pull_into(i, extra, &mut acc[i])?;
        }
        rounds.push(RoundRecord {
            r,
            b_r,
            t_r,
            active: active.len(),
        });
        if t_r >= m {
            break;
        }
        let estimates: Vec<f64> = acc.iter().map(|a| a.mean).collect();
        active = update_active_set(&estimates, &active, b_r, spec.alpha1(), spec.alpha2())?;
        t_prev = t_r;
        r += 1;
    }

    let estimates: Vec<f64> = acc.iter().map(|a| a.mean).collect();
    let (lo, hi) = anchors(&estimates, spec.alpha1(), spec.alpha2())?;
    let selected = band(&estimates, lo, hi);
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let estimate = if spec.is_pointwise() {
        let mut vals: Vec<f64> = selected.iter().map(|&i| estimates[i]).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals.iter().sum::<f64>() / vals.len() as f64
    } else {
        // prior samples are discarded: one fresh observation per selected arm
        let mut sum = 0.0;
        for &i in &selected {
            sum += env.pull(i)?;
        }
        sum / selected.len() as f64
    };
    let (total, per_arm) = env.stats();
    assert!(
        total <= sched.budget() + selected.len() as u64,
        "budget overflow: M = {total} > n m + |S| = {}",
        sched.budget() + selected.len() as u64
    );
    Ok(EstimateReport {
        functional: spec.to_string(),
        estimate,
        truth,
        abs_err: (estimate - truth).abs(),
        samples_total: total,
        per_arm_counts: per_arm,
        schedule: sched,
        seed: env.seed(),
        selected,
        rounds,
        notes,
    })
}
