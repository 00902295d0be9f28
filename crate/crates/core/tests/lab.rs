use iab_core::harness::fit_slope;
use iab_core::lab::grid::{kl_divergence_from_difference, DensityGrid};
use iab_core::lab::{
    construct_pair, make_pair, sigma_sweep, smooth_pair, wasserstein2_between, wasserstein_inf_between,
    ConstructionPair, PairKind,
};
use iab_core::quadrature::integrate_with_breaks;
use iab_core::Error;

fn kl_at(pair: &ConstructionPair, sigma: f64) -> f64 {
    let sm = smooth_pair(pair, sigma).unwrap();
    kl_divergence_from_difference(&sm.p1, &sm.diff).unwrap()
}

fn tv_at(pair: &ConstructionPair, sigma: f64) -> f64 {
    let sm = smooth_pair(pair, sigma).unwrap();
    0.5 * sm.diff.iter().map(|d| d.abs()).sum::<f64>() * sm.p1.step()
}

/// Unsmoothed `KL(F1 || F2)` by quadrature over the densities.
fn raw_kl(pair: &ConstructionPair) -> f64 {
    let (lo, hi) = (pair.f1.support_lo(), pair.f1.support_hi());
    let mut breaks = pair.f1.breaks();
    breaks.extend(pair.f2.breaks());
    integrate_with_breaks(
        |x| {
            let p = pair.f1.pdf(x).unwrap();
            let q = pair.f2.pdf(x).unwrap();
            if p > 0.0 {
                p * (p / q).ln()
            } else {
                0.0
            }
        },
        lo,
        hi,
        &breaks,
        1e-16,
        1e-12,
    )
    .value
}

#[test]
fn thresholding_in_the_feasible_regime() {
    let kind = PairKind::MedianPair { k: 1 };
    let eps_grid = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
    let pts: Vec<(f64, f64)> = eps_grid
        .iter()
        .map(|&e| (e, kl_at(&make_pair(kind, e).unwrap(), 0.5 * e.sqrt())))
        .collect();
    let fit = fit_slope(&pts).unwrap();
    assert!((fit.slope - 1.5).abs() <= 0.3, "slope {}", fit.slope);

    let eps = 1e-3;
    let pair = make_pair(kind, eps).unwrap();
    let low = kl_at(&pair, 0.5 * eps.sqrt());
    let high = kl_at(&pair, eps.powf(0.3));
    assert!(low >= 100.0 * high, "ratio {}", low / high);

    let sigmas: Vec<f64> = (0..=12).map(|i| 0.25 * eps.sqrt() * 1.3f64.powi(i)).collect();
    let sweep = sigma_sweep(&pair, &sigmas).unwrap();
    assert!(sweep.windows(2).all(|w| w[1].1 <= w[0].1), "{sweep:?}");
}

#[test]
fn kl_is_nonnegative_and_below_the_unsmoothed_value() {
    for (k, eps) in [(1, 1e-3), (2, 1e-3), (4, 1e-4)] {
        let pair = make_pair(PairKind::MedianPair { k }, eps).unwrap();
        let raw = raw_kl(&pair);
        for sigma in [0.2 * eps.sqrt(), eps.sqrt(), eps.powf(0.3)] {
            let kl = kl_at(&pair, sigma);
            assert!(kl >= 0.0, "k={k}, sigma={sigma}: KL {kl}");
            // smoothing is a Markov kernel applied to both sides
            assert!(
                kl <= raw * (1.0 + 1e-6),
                "k={k}, sigma={sigma}: KL {kl} > unsmoothed {raw}"
            );
        }
    }
}

#[test]
fn pinsker_holds_on_smoothed_pairs() {
    let pair = make_pair(PairKind::MedianPair { k: 1 }, 1e-3).unwrap();
    for sigma in [0.01, 0.03, 0.1] {
        let tv = tv_at(&pair, sigma);
        let kl = kl_at(&pair, sigma);
        assert!(
            tv <= (kl / 2.0).sqrt() * (1.0 + 1e-9),
            "sigma={sigma}: TV {tv}, KL {kl}"
        );
    }
}

#[test]
fn winf_dominates_w2() {
    let pairs = [
        make_pair(PairKind::MeanDirac, 0.1).unwrap(),
        make_pair(PairKind::MaxW2 { beta: 2.0 }, 0.1).unwrap(),
        make_pair(PairKind::MaxWinf { beta: 1.5 }, 0.1).unwrap(),
        make_pair(PairKind::MaxKl { beta: 2.0 }, 0.1).unwrap(),
        make_pair(PairKind::MedianPair { k: 1 }, 1e-3).unwrap(),
        construct_pair(PairKind::TrimmedPair { k: 1, alpha: 0.25 }, 1e-3).unwrap(),
    ];
    for p in &pairs {
        let w2 = wasserstein2_between(&p.f1, &p.f2);
        let winf = wasserstein_inf_between(&p.f1, &p.f2);
        assert!(winf >= w2 - 1e-12, "{}: W2 {w2} > Winf {winf}", p.kind.name());
        assert!(w2 > 0.0, "{}: identical distributions", p.kind.name());
    }
}

#[test]
fn pairs_separate_their_functional() {
    for kind in [
        PairKind::MeanDirac,
        PairKind::MaxW2 { beta: 2.0 },
        PairKind::MaxWinf { beta: 2.0 },
        PairKind::MaxKl { beta: 2.0 },
    ] {
        let p = make_pair(kind, 0.05).unwrap();
        assert!(p.gap >= 0.05 * (1.0 - 1e-9), "{}: gap {}", kind.name(), p.gap);
    }
    let median = make_pair(PairKind::MedianPair { k: 2 }, 1e-3).unwrap();
    assert!(median.gap >= 1e-3);
}

#[test]
fn oversized_eps_is_rejected() {
    assert!(matches!(
        make_pair(PairKind::MedianPair { k: 8 }, 0.01),
        Err(Error::EpsTooLarge { .. })
    ));
    assert!(matches!(
        make_pair(PairKind::TrimmedPair { k: 1, alpha: 0.25 }, 1e-3),
        Err(Error::GapTooSmall { .. })
    ));
}

#[test]
fn gaussian_shift_kl_matches_closed_form() {
    let (cells, mu) = (24_000, 0.3);
    let p = DensityGrid::from_fn(-10.0, 10.0, cells, |x: f64| (-x * x / 2.0).exp())
        .unwrap()
        .normalized()
        .unwrap();
    let q = DensityGrid::from_fn(-10.0, 10.0, cells, |x: f64| (-(x - mu) * (x - mu) / 2.0).exp())
        .unwrap()
        .normalized()
        .unwrap();
    let kl = iab_core::lab::kl_divergence(&p, &q).unwrap();
    assert!((kl - mu * mu / 2.0).abs() <= 1e-6, "KL {kl}");
}
