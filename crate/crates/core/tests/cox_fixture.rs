use std::path::PathBuf;

use rtimpute::linalg::Matrix;
use rtimpute::population::{ingest_csv, Variable, VariableKind, VariableRole, VariableSchema};
use rtimpute::survival::{cox_partial_likelihood, fit_cox_detailed};
use serde::Deserialize;

#[derive(Deserialize)]
struct Oracle {
    predictors: Vec<String>,
    beta: Vec<f64>,
    loglik: f64,
    events: usize,
    baseline_times: Vec<f64>,
    baseline_cumhaz_left_limit: Vec<f64>,
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn schema() -> VariableSchema {
    VariableSchema::new(vec![
        Variable::new("x1", VariableKind::Continuous, VariableRole::Predictor),
        Variable::new("x2", VariableKind::Binary, VariableRole::Predictor),
        Variable::new("time", VariableKind::Continuous, VariableRole::OutcomeTime),
        Variable::new("status", VariableKind::Binary, VariableRole::OutcomeStatus),
    ])
    .unwrap()
}

fn oracle() -> Oracle {
    let text = std::fs::read_to_string(fixture_dir().join("cox_fixture_oracle.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn coefficients_match_reference_fit() {
    let data = ingest_csv(fixture_dir().join("cox_fixture.csv"), &schema()).unwrap();
    let o = oracle();
    let fit = fit_cox_detailed(&data, &o.predictors).unwrap();
    for (b, r) in fit.model.beta().iter().zip(&o.beta) {
        assert!((b - r).abs() < 1e-6, "beta {b} vs {r}");
    }
    assert!((fit.loglik - o.loglik).abs() < 1e-8);
    assert!(fit.score.iter().all(|s| s.abs() < 1e-8));
    assert!(fit.model.converged());
    assert_eq!(fit.model.trained_on_n(), 100);
    assert!(fit.loglik_trace.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn baseline_matches_reference_fit() {
    let data = ingest_csv(fixture_dir().join("cox_fixture.csv"), &schema()).unwrap();
    let o = oracle();
    let model = fit_cox_detailed(&data, &o.predictors).unwrap().model;
    let base = model.baseline();
    assert_eq!(base.len(), o.events);
    assert_eq!(o.baseline_cumhaz_left_limit[0], 0.0);
    for (k, p) in base.iter().enumerate() {
        assert_eq!(p.time, o.baseline_times[k]);
        if k + 1 < o.events {
            // the reference reports H0 just before each event time
            let r = o.baseline_cumhaz_left_limit[k + 1];
            assert!((p.cumhaz - r).abs() < 1e-6 * r.max(1e-3), "H0[{k}] {} vs {r}", p.cumhaz);
        }
    }
}

#[test]
fn score_matches_finite_differences() {
    let data = ingest_csv(fixture_dir().join("cox_fixture.csv"), &schema()).unwrap();
    let times = data.times();
    let status: Vec<bool> = data.statuses().iter().map(|&s| s == 1.0).collect();
    let x = Matrix::from_rows(&(0..data.n_rows()).map(|i| data.row(i)[..2].to_vec()).collect::<Vec<_>>());
    let beta = [0.3, -0.2];
    let (_, score, info) = cox_partial_likelihood(&times, &status, &x, &beta);
    let h = 1e-5;
    for j in 0..2 {
        let mut up = beta;
        let mut dn = beta;
        up[j] += h;
        dn[j] -= h;
        let (lu, su, _) = cox_partial_likelihood(&times, &status, &x, &up);
        let (ld, sd, _) = cox_partial_likelihood(&times, &status, &x, &dn);
        let fd = (lu - ld) / (2.0 * h);
        assert!((fd - score[j]).abs() < 1e-6, "score {j}: {fd} vs {}", score[j]);
        for k in 0..2 {
            let fd2 = -(su[k] - sd[k]) / (2.0 * h);
            assert!((fd2 - info[(k, j)]).abs() < 1e-5, "info {k}{j}");
        }
    }
}
