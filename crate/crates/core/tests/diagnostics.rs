use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use feedback_iv::diagnostics::{diagnose, Tier};
use feedback_iv::estimators::Dataset;
use feedback_iv::simulation::{gen_base_regressors, gen_sample, rng_for, DgpSpec, Process};

mod common;
use common::dense;

fn dataset(x: DMatrix<f64>, seed: u64) -> Dataset {
    let y = dense::random_vector(x.nrows(), seed);
    Dataset::unlabeled(x, y).unwrap()
}

#[test]
fn ratios_match_dense_traces() {
    let x = dense::ar1_design(60, 7, 0.6, 4);
    let d = diagnose(&dataset(x.clone(), 5), 4).unwrap();
    let m = dense::annihilator(&x);
    for (l, r) in d.lower_trace_ratios.iter().enumerate() {
        let lead = dense::lead_matrix(60, l + 1);
        let want = (lead * &m).trace() / 60.0;
        assert!((r - want).abs() < 1e-12, "lag {}: {r} vs {want}", l + 1);
    }
    let mu = (d.lower_trace_ratios[0].abs() * 60.0 / 7.0).sqrt().min(1.0);
    assert!((d.mu - mu).abs() < 1e-12);
    assert_eq!(d.k_over_t, 7.0 / 60.0);
}

#[test]
fn rotation_leaves_diagnostics_unchanged() {
    let x = dense::ar1_design(80, 5, 0.7, 11);
    let a = dense::random_design(5, 5, 12) + DMatrix::identity(5, 5) * 3.0;
    let d1 = diagnose(&dataset(x.clone(), 13), 3).unwrap();
    let d2 = diagnose(&dataset(&x * &a, 13), 3).unwrap();
    for (p, q) in d1.lower_trace_ratios.iter().zip(&d2.lower_trace_ratios) {
        assert!((p - q).abs() < 1e-10);
    }
    assert!((d1.mu - d2.mu).abs() < 1e-10);
    assert!((d1.alpha_t_stat - d2.alpha_t_stat).abs() < 1e-7 * d1.alpha_t_stat.abs().max(1.0));
    assert_eq!(
        (d1.tier, d1.unique_root_ok, d1.mu_bound_ok),
        (d2.tier, d2.unique_root_ok, d2.mu_bound_ok)
    );
    // the feedback coefficients of XA are A'α
    let rotated = a.transpose() * DVector::from_vec(d1.estimated_alpha.clone());
    let got = DVector::from_vec(d2.estimated_alpha.clone());
    assert!((rotated - &got).norm() < 1e-9 * got.norm());
}

#[test]
fn higher_lead_ratios_stay_below_the_first() {
    for process in [Process::Ar1, Process::Ma1] {
        for (k, rho) in [(10, 0.3), (25, 0.8), (50, 0.8), (50, 0.95)] {
            for seed in 0..3 {
                let x = gen_base_regressors(200, k, process, rho, &mut rng_for(seed, 0)).unwrap();
                let d = diagnose(&dataset(x, seed), 6).unwrap();
                let first = d.lower_trace_ratios[0].abs();
                for r in &d.lower_trace_ratios[3..] {
                    assert!(
                        r.abs() <= first + 0.02,
                        "{process:?} K={k} rho={rho}: {:?}",
                        d.lower_trace_ratios
                    );
                }
            }
        }
    }
}

#[test]
fn white_noise_is_green_and_persistent_design_is_red() {
    for seed in 0..5 {
        let wn = gen_base_regressors(200, 50, Process::Ar1, 0.0, &mut rng_for(seed, 0)).unwrap();
        let d = diagnose(&dataset(wn, seed), 4).unwrap();
        assert!(
            d.lower_trace_ratios[0].abs() < 0.05,
            "{:?}",
            d.lower_trace_ratios
        );
        assert_eq!(d.tier, Tier::Green);

        let data = gen_sample(
            &DgpSpec::single_feedback(200, 50, 0.8, 1.5),
            &mut rng_for(seed, 1),
        )
        .unwrap();
        let d = diagnose(&data, 4).unwrap();
        assert_eq!(d.tier, Tier::Red, "{:?}", d.lower_trace_ratios);
        assert!(!d.unique_root_ok);
    }
}

#[test]
fn planted_feedback_is_recovered() {
    let spec = DgpSpec::single_feedback(400, 4, 0.5, 1.0);
    let data = gen_sample(&spec, &mut rng_for(3, 0)).unwrap();
    let d = diagnose(&data, 2).unwrap();
    assert!(
        (d.estimated_alpha[0] - 1.0).abs() < 0.25,
        "{:?}",
        d.estimated_alpha
    );
    assert!(d.estimated_alpha[1..].iter().all(|a| a.abs() < 0.25));
}

#[test]
fn invalid_lag_range_is_rejected() {
    let data = dataset(dense::random_design(10, 2, 1), 2);
    assert!(diagnose(&data, 0).is_err());
    assert!(diagnose(&data, 10).is_err());
    assert!(diagnose(&data, 9).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn flags_follow_their_definitions(t in 12usize..80, kf in 0.05f64..0.6, seed in 0u64..1000) {
        let k = ((t as f64 * kf) as usize).clamp(1, t - 2);
        let data = dataset(dense::random_design(t, k, seed), seed + 1);
        let d = diagnose(&data, 2).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.mu));
        prop_assert_eq!(d.unique_root_ok, 5 * k < t);
        prop_assert_eq!(d.mu_bound_ok, (k as f64) < t as f64 / (1.0 + (1.0 + d.mu).powi(2)));
        // |tr(D'M)| = |tr(D'P)| <= K
        prop_assert!(d.lower_trace_ratios[0].abs() * t as f64 <= k as f64 + 1e-9);
    }
}
