mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rtimpute::metrics::{
    auc, calibration_in_the_large, calibration_in_the_large_closed_form, calibration_slope,
    concordance_counts, decision_curve, grouped_km_calibration, kaplan_meier, oe_ratio,
    ConcordanceCounts, MetricsError,
};

use common::rng;

/// O(n²) Harrell pair counts straight from the definition.
fn brute_force(lp: &[f64], time: &[f64], status: &[f64]) -> ConcordanceCounts {
    let mut c = ConcordanceCounts::default();
    for i in 0..lp.len() {
        for j in (i + 1)..lp.len() {
            let (first, other) = if time[i] < time[j] {
                (i, j)
            } else if time[j] < time[i] {
                (j, i)
            } else if status[i] == 1.0 && status[j] == 0.0 {
                (i, j)
            } else if status[j] == 1.0 && status[i] == 0.0 {
                (j, i)
            } else {
                continue;
            };
            if status[first] != 1.0 {
                continue;
            }
            if lp[first] > lp[other] {
                c.concordant += 1;
            } else if lp[first] < lp[other] {
                c.discordant += 1;
            } else {
                c.tied += 1;
            }
        }
    }
    c
}

fn survival_data() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=200).prop_flat_map(|n| {
        (
            proptest::collection::vec((0i32..12).prop_map(f64::from), n),
            proptest::collection::vec((1i32..30).prop_map(f64::from), n),
            proptest::collection::vec(proptest::bool::weighted(0.6).prop_map(|b| f64::from(u8::from(b))), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn concordance_matches_brute_force((lp, time, status) in survival_data()) {
        let fast = concordance_counts(&lp, &time, &status).unwrap();
        prop_assert_eq!(fast, brute_force(&lp, &time, &status));
    }

    #[test]
    fn closed_form_citl_matches_irls(
        e in proptest::collection::vec(0.01f64..3.0, 5..300),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let mut status: Vec<f64> = e.iter().map(|x| f64::from(u8::from(r.random::<f64>() < 1.0 - (-x).exp()))).collect();
        status[0] = 1.0;
        let irls = calibration_in_the_large(&e, &status).unwrap();
        let closed = calibration_in_the_large_closed_form(&e, &status).unwrap();
        prop_assert!((irls - closed).abs() < 1e-10, "{} vs {}", irls, closed);
    }

    #[test]
    fn citl_and_eo_respond_to_uniform_rescaling(
        e in proptest::collection::vec(0.05f64..2.0, 10..200),
        k in 0.2f64..5.0,
    ) {
        let status: Vec<f64> = (0..e.len()).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
        let scaled: Vec<f64> = e.iter().map(|x| x * k).collect();
        let a = calibration_in_the_large_closed_form(&e, &status).unwrap();
        let b = calibration_in_the_large_closed_form(&scaled, &status).unwrap();
        prop_assert!((a - b - k.ln()).abs() < 1e-12);
        let eo = oe_ratio(&scaled, &status).unwrap() / oe_ratio(&e, &status).unwrap();
        prop_assert!((eo - k).abs() < 1e-12 * k);
    }
}

/// Exponential survival with hazard `base * exp(lp)` and uniform censoring.
/// Returns (lp, time, status).
fn exponential_cohort(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let base = 0.01;
    let mut lp = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    for _ in 0..n {
        let l: f64 = r.random_range(-1.5..1.5);
        let t = Exp::new(base * l.exp()).unwrap().sample(&mut r);
        let c = r.random_range(0.0..150.0);
        lp.push(l);
        time.push(t.min(c));
        status.push(f64::from(u8::from(t <= c)));
    }
    (lp, time, status)
}

#[test]
fn poisson_generator_gives_unit_slope_and_zero_citl() {
    let (lp, time, status) = exponential_cohort(1, 20_000);
    let expected: Vec<f64> = lp.iter().zip(&time).map(|(l, t)| 0.01 * l.exp() * t).collect();
    let citl = calibration_in_the_large(&expected, &status).unwrap();
    let slope = calibration_slope(&lp, &expected, &status).unwrap();
    assert!(citl.abs() < 0.05, "citl {citl}");
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
}

#[test]
fn shrunken_predictor_doubles_slope_and_inflated_halves_it() {
    let (lp, time, status) = exponential_cohort(2, 20_000);
    for (factor, target) in [(0.5, 2.0), (2.0, 0.5)] {
        let est: Vec<f64> = lp.iter().map(|l| l * factor).collect();
        let expected: Vec<f64> = est.iter().zip(&time).map(|(l, t)| 0.01 * l.exp() * t).collect();
        let slope = calibration_slope(&est, &expected, &status).unwrap();
        assert!((slope - target).abs() < 0.1 * target, "factor {factor}: slope {slope}");
    }
}

#[test]
fn constant_predictor_has_no_slope() {
    let status = [1.0, 0.0, 1.0, 0.0];
    let e = [0.5, 0.5, 0.5, 0.5];
    assert_eq!(
        calibration_slope(&[0.3; 4], &e, &status).unwrap_err(),
        MetricsError::DegenerateLP
    );
}

#[test]
fn kaplan_meier_hand_example() {
    let time = [1.0, 2.0, 3.0, 4.0, 5.0];
    let status = [1.0, 0.0, 1.0, 0.0, 1.0];
    assert!((kaplan_meier(&time, &status, 0.5).unwrap() - 1.0).abs() < 1e-15);
    assert!((kaplan_meier(&time, &status, 3.0).unwrap() - 0.8 * (2.0 / 3.0)).abs() < 1e-15);
    assert!((kaplan_meier(&time, &status, 5.0).unwrap()).abs() < 1e-15);
}

#[test]
fn grouped_calibration_without_censoring_is_the_event_fraction() {
    let mut r = rng(4);
    let n = 1000;
    let risk: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let time: Vec<f64> = risk.iter().map(|p| if r.random::<f64>() < *p { 50.0 } else { 500.0 }).collect();
    let status = vec![1.0; n];
    let cal = grouped_km_calibration(&risk, &time, &status, 10, 100.0).unwrap();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| risk[a].total_cmp(&risk[b]));
    for (k, g) in cal.groups.iter().enumerate() {
        let part = &order[k * 100..(k + 1) * 100];
        let frac = part.iter().filter(|&&i| time[i] <= 100.0).count() as f64 / 100.0;
        let mean = part.iter().map(|&i| risk[i]).sum::<f64>() / 100.0;
        assert_eq!(g.n_group, 100);
        assert!((g.km_observed_risk - frac).abs() < 1e-12);
        assert!((g.mean_predicted_risk - mean).abs() < 1e-12);
    }
    // mean predicted risk increases over the groups
    assert!(cal.groups.windows(2).all(|w| w[1].mean_predicted_risk >= w[0].mean_predicted_risk));
}

#[test]
fn decision_curve_identities() {
    let mut r = rng(5);
    let n = 800;
    let time: Vec<f64> = (0..n).map(|_| r.random_range(1.0..7000.0)).collect();
    let status: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.random::<f64>() < 0.4))).collect();
    let horizon = 3650.0;
    let event: Vec<bool> = (0..n).map(|i| status[i] == 1.0 && time[i] <= horizon).collect();
    let prevalence = event.iter().filter(|&&e| e).count() as f64 / n as f64;
    let perfect: Vec<f64> = event.iter().map(|&e| if e { 1.0 } else { 0.0 }).collect();
    let thresholds: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    let dc = decision_curve(&perfect, &time, &status, &thresholds, horizon).unwrap();
    assert!(dc.nb_none.iter().all(|&v| v == 0.0));
    assert!(dc.nb_model.iter().all(|&v| v == prevalence));

    let at_prev = decision_curve(&perfect, &time, &status, &[prevalence], horizon).unwrap();
    assert!(at_prev.nb_all[0].abs() < 1e-15, "{}", at_prev.nb_all[0]);

    // a useless model that treats everyone equals treat-all
    let all = decision_curve(&vec![1.0; n], &time, &status, &thresholds, horizon).unwrap();
    assert_eq!(all.nb_model, all.nb_all);
}

#[test]
fn auc_of_perfect_and_reversed_scores() {
    let score = [0.1, 0.2, 0.3, 0.4];
    let label = [false, false, true, true];
    assert_eq!(auc(&score, &label).unwrap(), 1.0);
    let rev: Vec<f64> = score.iter().map(|s| -s).collect();
    assert_eq!(auc(&rev, &label).unwrap(), 0.0);
    assert_eq!(auc(&[1.0; 4], &label).unwrap(), 0.5);
}
