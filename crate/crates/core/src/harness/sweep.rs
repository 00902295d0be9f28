use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Mode, SweepConfig};
use super::fit::{fit_slope, SlopeFit};
use crate::env::BanditEnv;
use crate::error::{Error, Result};
use crate::model::{check_assumptions, AssumptionParams};
use crate::offline::{offline_schedule, run_offline, EstimateReport};
use crate::online::run_online;

/// One trial of one cell, as written to CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub mode: Mode,
    pub functional: String,
    pub trial: usize,
    pub estimate: f64,
    pub truth: f64,
    pub abs_err: f64,
    pub samples_total: u64,
    pub n: u64,
    pub m: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub eps: f64,
    pub mode: Mode,
    pub trials: usize,
    pub median_samples: f64,
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
    /// Slope of `ln(median M)` against `ln(1 / eps)` per mode.
    pub slopes: BTreeMap<Mode, SlopeFit<f64>>,
    pub config: BTreeMap<String, String>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in cell `(eps_index, mode)`.
pub fn derive_seed(seed: u64, eps_index: usize, mode: Mode, trial: usize) -> u64 {
    [eps_index as u64, mode.index(), trial as u64]
        .into_iter()
        .fold(splitmix64(seed), |acc, part| splitmix64(acc ^ splitmix64(part)))
}

/// Median of a nonempty sample (mean of the middle pair for even sizes).
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs one trial and returns its report.
pub fn run_trial(
    cfg: &SweepConfig,
    params: &AssumptionParams,
    eps: f64,
    mode: Mode,
    seed: u64,
) -> Result<EstimateReport> {
    let mut env = BanditEnv::new(cfg.distribution.clone(), cfg.noise_sd, seed)?.with_noise_mode(cfg.noise_mode);
    match mode {
        Mode::Offline => {
            let sched = offline_schedule(&cfg.functional, eps, cfg.delta, params, cfg.schedule_mode)?;
            run_offline(&mut env, &cfg.functional, &sched)
        }
        Mode::Online => run_online(&mut env, &cfg.functional, eps, cfg.delta, params, cfg.schedule_mode),
    }
}

/// Runs every `(eps, mode, trial)` cell; trials run in parallel and are
/// reported in `(eps, mode, trial)` order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let params: Vec<AssumptionParams> = cfg
        .eps_grid
        .iter()
        .map(|&eps| {
            check_assumptions(&cfg.distribution, &cfg.functional, eps).map_err(|v| {
                let clauses: Vec<String> = v.iter().map(|x| format!("{} ({})", x.clause, x.detail)).collect();
                Error::config("distribution", format!("assumptions fail: {}", clauses.join("; ")))
            })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, Mode, usize)> = (0..cfg.eps_grid.len())
        .flat_map(|i| {
            cfg.modes
                .iter()
                .flat_map(move |&mode| (0..cfg.trials).map(move |t| (i, mode, t)))
        })
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(i, mode, trial)| {
            let eps = cfg.eps_grid[i];
            let seed = derive_seed(cfg.seed, i, mode, trial);
            let rep = run_trial(cfg, &params[i], eps, mode, seed)?;
            Ok(SweepRow {
                eps,
                mode,
                functional: rep.functional,
                trial,
                estimate: rep.estimate,
                truth: rep.truth,
                abs_err: rep.abs_err,
                samples_total: rep.samples_total,
                n: rep.schedule.n,
                m: rep.schedule.m,
                seed,
            })
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (i, &eps) in cfg.eps_grid.iter().enumerate() {
        for &mode in &cfg.modes {
            let cell: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.mode == mode && r.eps == cfg.eps_grid[i])
                .collect();
            let mut samples: Vec<f64> = cell.iter().map(|r| r.samples_total as f64).collect();
            let failures = cell.iter().filter(|r| !(r.abs_err <= eps)).count();
            cells.push(CellSummary {
                eps,
                mode,
                trials: cell.len(),
                median_samples: median(&mut samples),
                failure_rate: failures as f64 / cell.len() as f64,
            });
        }
    }

    let mut slopes = BTreeMap::new();
    if cfg.eps_grid.len() >= 3 {
        for &mode in &cfg.modes {
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.mode == mode)
                .map(|c| (1.0 / c.eps, c.median_samples))
                .collect();
            slopes.insert(mode, fit_slope(&pts)?);
        }
    }
    Ok(SweepReport {
        rows,
        cells,
        slopes,
        config: cfg.echo(),
    })
}

impl SweepReport {
    pub fn failure_rate(&self, eps: f64, mode: Mode) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.eps == eps && c.mode == mode)
            .map(|c| c.failure_rate)
    }
}
