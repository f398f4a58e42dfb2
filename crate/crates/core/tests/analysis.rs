use crystal_core::analysis::stats::{mean_se, median};
use crystal_core::analysis::{
    classify_comb, default_d_grid, empirical_shape_distribution, estimate_dtilde, estimate_speeds, fit_tail,
    TailStatus,
};
use crystal_core::engine::{run_replicas, PoissonEngine};
use crystal_core::exact::{build_truncated, solve_stationary, CombCase};
use crystal_core::seed;
use crystal_core::{Boundary, Configuration, RateTriple};

fn beta(a: f64, b: f64, c: f64) -> RateTriple {
    RateTriple::new(a, b, c).unwrap()
}

fn flat(n: usize) -> Configuration {
    Configuration::flat(n, Boundary::Zero).unwrap()
}

#[test]
fn three_site_speeds_agree_with_each_other_and_the_solver() {
    let b = beta(1.0, 2.0, 3.0);
    let est = estimate_speeds(&PoissonEngine, &b, &flat(3), 5000.0, 40, 11).unwrap();
    for i in 0..3 {
        for j in i + 1..3 {
            let se = est.std_errors[i].hypot(est.std_errors[j]);
            assert!((est.speeds[i] - est.speeds[j]).abs() < 3.0 * se, "{:?}", est.speeds);
        }
    }
    let v3 = solve_stationary(&build_truncated(3, &b, 40).unwrap(), 1e-10).unwrap().throughput[0];
    for (v, se) in est.speeds.iter().zip(&est.std_errors) {
        assert!((v - v3).abs() < 3.0 * se, "speed {v} vs solver {v3} (se {se})");
    }
}

#[test]
fn speed_identity_through_occupation_law() {
    let b = beta(1.0, 2.0, 3.0);
    let x = flat(3);
    let est = estimate_speeds(&PoissonEngine, &b, &x, 5000.0, 40, 12).unwrap();
    let (total, total_se) = est.total();
    let sums: Vec<f64> = (0..8)
        .map(|r| {
            let d =
                empirical_shape_distribution(&PoissonEngine, &b, &x, 500.0, 10_000.0, seed::replica(13, r))
                    .unwrap();
            d.throughput(&b).iter().sum()
        })
        .collect();
    let (occ, occ_se) = mean_se(&sums);
    assert!(
        (total - occ).abs() < 3.0 * total_se.hypot(occ_se),
        "sum of speeds {total} vs occupation throughput {occ}"
    );
}

#[test]
fn comb_deviation_shrinks_with_horizon() {
    for (b, n, case) in [(beta(2.0, 3.0, 1.0), 5, CombCase::E1), (beta(3.0, 2.0, 1.0), 4, CombCase::E2)] {
        let dev = |t: f64| {
            let trajs = run_replicas(&PoissonEngine, &b, &flat(n), t, &[], 17, 20).unwrap();
            let d: Vec<f64> = trajs
                .iter()
                .map(|tr| classify_comb(&tr.speeds(), &b, case, 0.05).unwrap().deviation)
                .collect();
            median(&d)
        };
        let (short, long) = (dev(500.0), dev(2000.0));
        assert!(long < short, "{case}: median deviation {long} at T=2000 vs {short} at T=500");
    }
}

#[test]
fn tail_probabilities_are_monotone_in_k() {
    let fit = fit_tail(
        &PoissonEngine,
        &beta(1.0, 3.0, 2.0),
        &flat(3),
        1,
        &[50.0, 100.0, 200.0],
        &(0..=15).collect::<Vec<_>>(),
        500,
        3,
    )
    .unwrap();
    for row in &fit.counts {
        assert_eq!(row[0], 500);
        assert!(row.windows(2).all(|w| w[0] >= w[1]), "{row:?}");
    }
}

#[test]
fn tail_is_tight_in_domain_d() {
    let fit = fit_tail(
        &PoissonEngine,
        &beta(1.0, 3.0, 2.0),
        &flat(3),
        0,
        &[100.0, 300.0, 1000.0],
        &(0..=20).collect::<Vec<_>>(),
        1000,
        21,
    )
    .unwrap();
    assert_eq!(fit.status, TailStatus::Tight, "{fit:?}");
    assert!(fit.alpha_hat.unwrap() > 0.0);
}

#[test]
fn tail_is_tight_for_monotone_rates() {
    let fit = fit_tail(
        &PoissonEngine,
        &beta(1.0, 2.0, 3.0),
        &flat(4),
        1,
        &[100.0, 300.0, 1000.0],
        &(0..=20).collect::<Vec<_>>(),
        1000,
        22,
    )
    .unwrap();
    assert!(fit.alpha_hat.unwrap() > 0.0, "{fit:?}");
    assert_eq!(fit.status, TailStatus::Tight, "{:?}", fit.alpha_by_horizon);
}

#[test]
fn tail_is_not_tight_in_comb_regime() {
    let fit = fit_tail(
        &PoissonEngine,
        &beta(3.0, 2.0, 1.0),
        &flat(3),
        0,
        &[100.0, 300.0, 1000.0],
        &(0..=20).collect::<Vec<_>>(),
        300,
        23,
    )
    .unwrap();
    assert_ne!(fit.status, TailStatus::Tight, "{:?}", fit.alpha_by_horizon);
}

#[test]
fn dtilde_grows_with_beta1() {
    let horizons = [50.0, 100.0, 200.0];
    let est = |b1: f64| {
        let grid = default_d_grid(1.0, b1, 0.05);
        estimate_dtilde(&PoissonEngine, 2, b1, 1.0, &grid, &horizons, 1000, 31).unwrap()
    };
    let (lo, hi) = (est(2.0), est(3.0));
    for e in [&lo, &hi] {
        assert!(e.d_hat >= e.beta0 && e.d_hat <= e.beta1);
    }
    assert!(
        lo.d_hat <= hi.d_hat + lo.bracket_width().max(hi.bracket_width()),
        "{} at beta1=2 vs {} at beta1=3",
        lo.d_hat,
        hi.d_hat
    );
}
