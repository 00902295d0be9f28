#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iab_core::{AssumptionParams, DistributionSpec, FunctionalSpec};

/// One randomized estimation problem, small enough to run in exact noise mode.
#[derive(Debug, Clone)]
pub struct Case {
    pub dist: DistributionSpec,
    pub spec: FunctionalSpec,
    pub params: AssumptionParams,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
}

fn bounded_top(rng: &mut ChaCha8Rng) -> (DistributionSpec, f64) {
    match rng.random_range(0..3) {
        0 => {
            let lo = rng.random_range(-1.0..1.0);
            (
                DistributionSpec::uniform(lo, lo + rng.random_range(0.5..2.0)).unwrap(),
                1.0,
            )
        }
        1 => {
            let beta = rng.random_range(1.0..2.5);
            (DistributionSpec::beta_tail(beta).unwrap(), beta)
        }
        _ => {
            let beta = rng.random_range(1.0..2.5);
            (
                DistributionSpec::truncated_beta_tail(beta, rng.random_range(0.01..0.2)).unwrap(),
                beta,
            )
        }
    }
}

fn any_dist(rng: &mut ChaCha8Rng, allow_dirac: bool) -> DistributionSpec {
    match rng.random_range(0..if allow_dirac { 5 } else { 4 }) {
        0 => DistributionSpec::gaussian(rng.random_range(-1.0..1.0), rng.random_range(0.2..1.5)).unwrap(),
        4 => DistributionSpec::dirac(rng.random_range(-1.0..1.0)).unwrap(),
        _ => bounded_top(rng).0,
    }
}

/// Draws a case from `seed`; every functional kind and several families appear.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = rng.random_range(0.05..0.3);
    let (dist, spec, params, eps) = match rng.random_range(0..4) {
        0 => (
            any_dist(&mut rng, true),
            FunctionalSpec::mean(),
            AssumptionParams::mean(1.0),
            rng.random_range(0.15..0.4),
        ),
        1 => {
            let spec = if rng.random_bool(0.5) {
                FunctionalSpec::median()
            } else {
                FunctionalSpec::quantile(rng.random_range(0.1..0.9)).unwrap()
            };
            (
                any_dist(&mut rng, true),
                spec,
                AssumptionParams::quantile(1.0, 1.0),
                rng.random_range(0.2..0.4),
            )
        }
        2 => {
            let (dist, beta) = bounded_top(&mut rng);
            (
                dist,
                FunctionalSpec::maximum(),
                AssumptionParams::maximum(1.0, 1.0, beta),
                rng.random_range(0.3..0.5),
            )
        }
        _ => (
            any_dist(&mut rng, false),
            FunctionalSpec::trimmed(rng.random_range(0.05..0.45)).unwrap(),
            AssumptionParams::trimmed([1.0, 1.0, 1.0, 1.0, 1.0, 0.5]),
            rng.random_range(0.3..0.5),
        ),
    };
    Case {
        dist,
        spec,
        params,
        eps,
        delta,
        seed: rng.random(),
    }
}

/// `{i : lo <= x_i <= hi}` for the anchors of `(alpha1, alpha2)`, by direct sorting.
pub fn oracle_band(x: &[f64], alpha1: f64, alpha2: f64) -> Vec<usize> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    let idx = |a: f64| ((a * n as f64 + 1e-9).floor() as usize).clamp(1, n) - 1;
    let (lo, hi) = (s[idx(alpha1)], s[idx(alpha2)]);
    (0..n).filter(|&i| x[i] >= lo && x[i] <= hi).collect()
}
