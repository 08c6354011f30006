use std::collections::HashSet;
use std::sync::Mutex;

use rtimpute::imputation::ImputationMethod;
use rtimpute::simulation::{
    default_scenarios, evaluate, read_rows_csv, run_external_model_simulation, run_loocv_simulation,
    run_loocv_simulation_with_hook, write_rows_csv, SimulationConfig, SimulationRow, Study,
};
use rtimpute::survival::fit_cox;
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec, SyntheticCohorts};

fn cohorts(n_local: usize, n_external: usize, seed: u64) -> SyntheticCohorts {
    let spec = SyntheticCohortSpec {
        n_local,
        n_external,
        ..SyntheticCohortSpec::default()
    };
    generate_synthetic_cohorts(&spec, seed).unwrap()
}

fn config(study: Study, ids: &[u32]) -> SimulationConfig {
    let mut c = SimulationConfig::new(study);
    c.scenarios = default_scenarios().into_iter().filter(|s| ids.contains(&s.id)).collect();
    c
}

fn bits(rows: &[SimulationRow]) -> Vec<[u64; 3]> {
    rows.iter()
        .map(|r| [r.lp_ref.to_bits(), r.lp_est.to_bits(), r.expected.to_bits()])
        .collect()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let c = cohorts(150, 100, 3);
    let mut cfg = config(Study::Local, &[1, 5]);
    cfg.jobs = Some(1);
    let one = run_loocv_simulation(&c.local, None, &cfg).unwrap();
    cfg.jobs = Some(4);
    let four = run_loocv_simulation(&c.local, None, &cfg).unwrap();
    assert_eq!(one, four);
    assert_eq!(bits(&one), bits(&four));
    let again = run_loocv_simulation(&c.local, None, &cfg).unwrap();
    assert_eq!(bits(&one), bits(&again));
}

#[test]
fn rows_are_ordered_and_complete() {
    let c = cohorts(120, 100, 4);
    let cfg = config(Study::Local, &[2, 3, 8]);
    let rows = run_loocv_simulation(&c.local, None, &cfg).unwrap();
    assert_eq!(rows.len(), 120 * 3 * 3);
    let keys: Vec<(u8, u32, u64)> = rows.iter().map(|r| (r.method, r.scenario, r.rowref)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(keys, sorted);
}

#[test]
fn held_out_patient_never_informs_its_own_characteristics() {
    let c = cohorts(100, 100, 5);
    let cfg = config(Study::Local, &[2]);
    let seen = Mutex::new(0usize);
    let hook = |rowref: u64, ids: &[u64]| {
        assert!(!ids.contains(&rowref), "row {rowref} leaked");
        assert_eq!(ids.len(), 99);
        *seen.lock().unwrap() += 1;
    };
    run_loocv_simulation_with_hook(&c.local, None, &cfg, Some(&hook)).unwrap();
    assert_eq!(*seen.lock().unwrap(), 100);
}

#[test]
fn enriched_study_evaluates_only_unsampled_patients() {
    let c = cohorts(300, 200, 6);
    let mut cfg = config(Study::Enriched, &[5]);
    cfg.enrichment_m = 100;
    cfg.fast_loocv = true;
    let local_ids: HashSet<u64> = c.local.row_ids().iter().copied().collect();
    let leaks = Mutex::new(Vec::new());
    let hook = |rowref: u64, ids: &[u64]| {
        if ids.contains(&rowref) {
            leaks.lock().unwrap().push(rowref);
        }
    };
    let rows = run_loocv_simulation_with_hook(&c.local, Some(&c.external), &cfg, Some(&hook)).unwrap();
    assert!(leaks.lock().unwrap().is_empty());
    let evaluated: HashSet<u64> = rows.iter().map(|r| r.rowref).collect();
    assert_eq!(evaluated.len(), 200);
    assert!(evaluated.is_subset(&local_ids));
}

#[test]
fn reference_lp_is_shared_across_methods_and_scenarios() {
    let c = cohorts(100, 100, 7);
    let cfg = config(Study::Local, &[1, 4, 7]);
    let rows = run_loocv_simulation(&c.local, None, &cfg).unwrap();
    for id in c.local.row_ids() {
        let refs: HashSet<u64> = rows
            .iter()
            .filter(|r| r.rowref == *id)
            .map(|r| r.lp_ref.to_bits())
            .collect();
        assert_eq!(refs.len(), 1);
    }
}

#[test]
fn all_predictors_missing_makes_joint_equal_to_mean_imputation() {
    let c = cohorts(150, 300, 8);
    let mut cfg = config(Study::External, &[7]);
    cfg.methods = vec![ImputationMethod::MeanImputation, ImputationMethod::Joint];
    cfg.fast_loocv = true;
    let rows = run_loocv_simulation(&c.local, Some(&c.external), &cfg).unwrap();
    let (m, j): (Vec<&SimulationRow>, Vec<&SimulationRow>) = rows.iter().partition(|r| r.method == 1);
    assert_eq!(m.len(), j.len());
    for (a, b) in m.iter().zip(&j) {
        assert_eq!(a.rowref, b.rowref);
        assert_eq!(a.lp_est.to_bits(), b.lp_est.to_bits());
    }
}

#[test]
fn external_model_study_keeps_the_supplied_model() {
    let c = cohorts(200, 400, 9);
    let model = fit_cox(&c.external, &c.external.schema().predictors()).unwrap();
    let cfg = config(Study::ExternalModel, &[2, 7]);
    let rows = run_external_model_simulation(&c.local, &c.external, &model, &cfg).unwrap();
    assert_eq!(rows.len(), 200 * 2 * 3);
    let s7 = evaluate(&rows, ImputationMethod::MeanImputation, 7).unwrap();
    assert_eq!(s7.cal_slope, None);
    let s2 = evaluate(&rows, ImputationMethod::JointAuxiliary, 2).unwrap();
    assert!(s2.cal_slope.is_some());
}

#[test]
fn study_kind_must_match_the_data() {
    let c = cohorts(60, 60, 10);
    assert!(run_loocv_simulation(&c.local, Some(&c.external), &config(Study::Local, &[1])).is_err());
    assert!(run_loocv_simulation(&c.local, None, &config(Study::External, &[1])).is_err());
    let mut empty = config(Study::Local, &[1]);
    empty.methods.clear();
    assert!(run_loocv_simulation(&c.local, None, &empty).is_err());
}

#[test]
fn rows_survive_a_csv_round_trip() {
    let c = cohorts(80, 60, 11);
    let rows = run_loocv_simulation(&c.local, None, &config(Study::Local, &[3])).unwrap();
    let mut buf = Vec::new();
    write_rows_csv(&rows, &mut buf).unwrap();
    let back = read_rows_csv(buf.as_slice()).unwrap();
    assert_eq!(bits(&back), bits(&rows));
    assert_eq!(back, rows);
}
