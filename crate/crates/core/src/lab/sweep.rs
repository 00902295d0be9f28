//! KL divergence between Gaussian smoothings of a construction pair.

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{
    convolve_gaussian, convolve_values, gaussian_kernel, kl_divergence_from_difference, log_ratio_sup,
    project_out_moments, DensityGrid, KERNEL_REACH,
};
use super::pairs::{ConstructionPair, PairKind};
use super::wasserstein::{wasserstein2_between, wasserstein_inf_between};
use crate::error::{Error, Result};
use crate::model::Family;
use crate::special::normal_cdf;

/// Reach of the kernel applied to the (mass-free) perturbation.
const DIFFERENCE_REACH: f64 = 10.0;

/// Both smoothed densities on one grid: `p1 = F1 * phi` and `p2 = p1 + diff`.
#[derive(Debug, Clone)]
pub struct SmoothedPair {
    pub p1: DensityGrid<f64>,
    pub diff: Vec<f64>,
}

/// Grid step `min(sigma / 8, sqrt(eps) / 64)`.
pub fn grid_step(eps: f64, sigma: f64) -> f64 {
    (sigma / 8.0).min(eps.sqrt() / 64.0)
}

fn dirac_at(pair: &ConstructionPair) -> Option<(f64, f64)> {
    match (pair.f1.family(), pair.f2.family()) {
        (Family::Dirac { at: a }, Family::Dirac { at: b }) => Some((*a, *b)),
        _ => None,
    }
}

// F2 - F1 at x, exact for bump pairs.
fn cdf_difference(pair: &ConstructionPair, x: f64) -> f64 {
    match pair.f2.family() {
        Family::PerturbedUniform {
            lo,
            hi,
            bump,
            shift,
            scale,
        } if x > *lo && x < *hi => scale * bump.cumulative(x - shift),
        _ => pair.f2.cdf(x) - pair.f1.cdf(x),
    }
}

/// Smooths both members of `pair` with `N(0, sigma^2)` on a shared grid.
///
/// Point masses are smoothed in closed form. Densities are tabulated as cell
/// masses; for bump pairs the perturbation is tabulated separately, its
/// discrete moments through order `2k` are projected out (the continuous bump
/// has none), and it is convolved with a wider kernel.
pub fn smooth_pair(pair: &ConstructionPair, sigma: f64) -> Result<SmoothedPair> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let step_target = grid_step(pair.eps, sigma);
    if let Some((a, b)) = dirac_at(pair) {
        let lo = a.min(b) - KERNEL_REACH * sigma;
        let hi = a.max(b) + KERNEL_REACH * sigma;
        let cells = ((hi - lo) / step_target).ceil() as usize;
        let smooth = |at: f64| move |x: f64| normal_cdf((x - at) / sigma);
        let p1 = DensityGrid::from_cdf(lo, hi, cells, smooth(a))?;
        let p2 = DensityGrid::from_cdf(lo, hi, cells, smooth(b))?;
        let diff = p2.values().iter().zip(p1.values()).map(|(y, x)| y - x).collect();
        return Ok(SmoothedPair { p1, diff });
    }
    if !pair.f1.has_density() || !pair.f2.has_density() {
        return Err(Error::invalid(
            "pair",
            "mixed point-mass and density pairs are not supported",
        ));
    }
    let lo = pair.f1.support_lo().min(pair.f2.support_lo());
    let hi = pair.f1.support_hi().max(pair.f2.support_hi());
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("pair", "smoothing needs bounded supports"));
    }
    let cells = ((hi - lo) / step_target).ceil().max(1.0) as usize;
    let base = DensityGrid::from_cdf(lo, hi, cells, |x| pair.f1.cdf(x))?;
    let step = base.step();
    let edge = |i: usize| if i == cells { hi } else { lo + step * i as f64 };
    let mut diff = vec![0.0; cells];
    let mut prev = cdf_difference(pair, lo);
    for (i, d) in diff.iter_mut().enumerate() {
        let next = cdf_difference(pair, edge(i + 1));
        *d = (next - prev) / step;
        prev = next;
    }
    if let Some(bump) = pair.bump() {
        let first = diff.iter().position(|v| *v != 0.0);
        let last = diff.iter().rposition(|v| *v != 0.0);
        if let (Some(a), Some(b)) = (first, last) {
            project_out_moments(&mut diff, a..b + 1, 2 * bump.k());
        }
    }
    let p1 = convolve_gaussian(&base, sigma)?;
    let (kernel, _) = gaussian_kernel(step, sigma, DIFFERENCE_REACH);
    let wide = convolve_values(&diff, &kernel);
    // re-index the wider output onto p1's window
    let pad_wide = (kernel.len() - 1) / 2;
    let pad = (p1.len() - cells) / 2;
    let offset = pad_wide - pad;
    let diff = wide[offset..offset + p1.len()].to_vec();
    Ok(SmoothedPair { p1, diff })
}

/// `KL(F1 * N(0, s^2) || F2 * N(0, s^2))` for every `s` in `sigmas` (ascending).
pub fn sigma_sweep(pair: &ConstructionPair, sigmas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if sigmas.windows(2).any(|w| !(w[0] < w[1])) || sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::invalid("sigmas", "must be positive and strictly ascending"));
    }
    sigmas
        .par_iter()
        .map(|&s| {
            let sm = smooth_pair(pair, s)?;
            Ok((s, kl_divergence_from_difference(&sm.p1, &sm.diff)?))
        })
        .collect()
}

/// `sup_x |ln(p1 * phi / p2 * phi)|` on the smoothing grid.
pub fn logratio_sup(pair: &ConstructionPair, sigma: f64) -> Result<f64> {
    if pair.bump().is_none() {
        return Err(Error::invalid("pair", format!("{} carries no bump", pair.kind.name())));
    }
    let sm = smooth_pair(pair, sigma)?;
    log_ratio_sup(&sm.p1, &sm.diff)
}

/// One row of a lower-bound sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabRow {
    pub eps: f64,
    pub sigma: f64,
    pub kl: f64,
    pub w2: f64,
    pub winf: f64,
    pub gap: f64,
    pub pair_kind: String,
    pub k: usize,
}

/// How the noise level of a sweep row is chosen from `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    Fixed(f64),
    /// `coeff * eps^exponent`.
    Power {
        coeff: f64,
        exponent: f64,
    },
}

impl SigmaRule {
    pub fn sigma(&self, eps: f64) -> f64 {
        match *self {
            SigmaRule::Fixed(s) => s,
            SigmaRule::Power { coeff, exponent } => coeff * eps.powf(exponent),
        }
    }
}

/// Builds `kind` at every `eps` and evaluates KL, W2, W-inf and the gap for every sigma rule.
///
/// Rows come back ordered by `(eps, sigma)` as given.
pub fn lab_sweep(kind: PairKind, eps_grid: &[f64], rules: &[SigmaRule]) -> Result<Vec<LabRow>> {
    let cells: Vec<(usize, usize)> = (0..eps_grid.len())
        .flat_map(|i| (0..rules.len()).map(move |j| (i, j)))
        .collect();
    let pairs: Vec<ConstructionPair> = eps_grid
        .iter()
        .map(|&e| super::pairs::construct_pair(kind, e))
        .collect::<Result<_>>()?;
    let distances: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|p| {
            (
                wasserstein2_between(&p.f1, &p.f2),
                wasserstein_inf_between(&p.f1, &p.f2),
            )
        })
        .collect();
    cells
        .par_iter()
        .map(|&(i, j)| {
            let pair = &pairs[i];
            let sigma = rules[j].sigma(pair.eps);
            let sm = smooth_pair(pair, sigma)?;
            let kl = kl_divergence_from_difference(&sm.p1, &sm.diff)?;
            Ok(LabRow {
                eps: pair.eps,
                sigma,
                kl,
                w2: distances[i].0,
                winf: distances[i].1,
                gap: pair.gap,
                pair_kind: kind.name().to_string(),
                k: kind.order(),
            })
        })
        .collect()
}
