#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtimpute::linalg::Matrix;
use rtimpute::population::{PopulationCharacteristics, Variable, VariableKind, VariableRole, VariableSchema};

pub fn names(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|i| format!("{prefix}{i}")).collect()
}

/// `d` continuous predictors `x0..` plus the two outcome columns.
pub fn predictor_schema(d: usize) -> Arc<VariableSchema> {
    let mut vars: Vec<Variable> = names("x", d)
        .into_iter()
        .map(|n| Variable::new(n, VariableKind::Continuous, VariableRole::Predictor))
        .collect();
    vars.push(Variable::new("time", VariableKind::Continuous, VariableRole::OutcomeTime));
    vars.push(Variable::new("status", VariableKind::Binary, VariableRole::OutcomeStatus));
    Arc::new(VariableSchema::new(vars).unwrap())
}

/// `A Aᵀ + ridge·I` with `A` uniform on [-1, 1].
pub fn random_sigma(rng: &mut ChaCha8Rng, d: usize, ridge: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(d, d) * ridge
}

pub fn to_matrix(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_rows(&(0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect::<Vec<_>>())
}

pub fn popchar(mu: &[f64], sigma: &DMatrix<f64>, n: u64) -> PopulationCharacteristics {
    PopulationCharacteristics::new(names("x", mu.len()), mu.to_vec(), to_matrix(sigma), n).unwrap()
}

/// Conditional mean and covariance of `x[miss]` given `x[obs]`, computed
/// from the joint precision matrix `Q = Σ⁻¹`:
/// `cov = Q_mm⁻¹`, `mean = μ_m − Q_mm⁻¹ Q_mo (x_o − μ_o)`.
pub fn precision_oracle(
    mu: &[f64],
    sigma: &DMatrix<f64>,
    miss: &[usize],
    obs: &[usize],
    x_obs: &[f64],
) -> (Vec<f64>, DMatrix<f64>) {
    let q = sigma.clone().try_inverse().expect("invertible");
    let q_mm = DMatrix::from_fn(miss.len(), miss.len(), |a, b| q[(miss[a], miss[b])]);
    let q_mo = DMatrix::from_fn(miss.len(), obs.len(), |a, b| q[(miss[a], obs[b])]);
    let cov = q_mm.try_inverse().expect("invertible block");
    let dev = DVector::from_iterator(obs.len(), obs.iter().zip(x_obs).map(|(&i, x)| x - mu[i]));
    let shift = &cov * (q_mo * dev);
    let mean = miss.iter().enumerate().map(|(a, &i)| mu[i] - shift[a]).collect();
    (mean, cov)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A store holding schema `cvd`, popchar `local`, model `cox` and binding
/// `default`, all derived from one synthetic local cohort.
pub fn loaded_store(dir: &std::path::Path, n: usize, seed: u64) -> (rtimpute::service::Store, rtimpute::population::Dataset) {
    use rtimpute::service::{EntityKind, Store};
    let spec = rtimpute::synthetic::SyntheticCohortSpec {
        n_local: n,
        n_external: 100,
        ..Default::default()
    };
    let data = rtimpute::synthetic::generate_synthetic_cohorts(&spec, seed).unwrap().local;
    let pc = rtimpute::population::estimate_characteristics(&data, &data.schema().covariates()).unwrap();
    let model = rtimpute::survival::fit_cox(&data, &data.schema().predictors()).unwrap();
    let store = Store::open(dir).unwrap();
    store.put(EntityKind::Schema, "cvd", serde_json::to_string(data.schema()).unwrap().as_bytes()).unwrap();
    store.put(EntityKind::Popchar, "local", pc.to_json().as_bytes()).unwrap();
    store.put(EntityKind::Model, "cox", model.to_json().as_bytes()).unwrap();
    store
        .put(
            EntityKind::Binding,
            "default",
            br#"{"schema_id":"cvd","popchar_id":"local","model_id":"cox"}"#,
        )
        .unwrap();
    (store, data)
}
