//! Real-time imputation of a single patient record from stored population
//! characteristics.
//!
//! Two strategies are offered:
//!
//! * mean imputation: every missing value becomes its population mean;
//! * joint imputation: missing values become the conditional expectation of a
//!   multivariate normal with the stored `(mu, Sigma)`, conditioned on the
//!   observed values of a working set of variables. The working set is either
//!   the model predictors alone or the predictors plus auxiliary variables.
//!
//! With `d` the missing and `g` the observed positions of the working set:
//!
//! ```text
//! E[x_d | x_g]   = mu_d + S_dg S_gg^-1 (x_g - mu_g)
//! Var[x_d | x_g] = S_dd - S_dg S_gg^-1 S_gd
//! ```
//!
//! `S_gg` is factored by Cholesky; a pivot below `1e-10 * max(diag(S_gg))`
//! is reported as [`ImputationError::SingularGivenBlock`].

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, semidefinite_factor, Cholesky, Matrix};
use crate::population::{Dataset, PopulationCharacteristics, VariableKind, VariableRole, VariableSchema};

/// Relative pivot threshold for the observed-block Cholesky factorization.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-10;

/// Smallest admissible number of random draws for multiple imputation.
pub const MIN_MULTIPLE_IMPUTATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImputationError {
    #[error("variable `{0}` is not covered by the population characteristics")]
    UnknownVariable(String),
    #[error("variable `{0}` is not part of the schema")]
    NotInSchema(String),
    #[error("outcome variable `{0}` must not be supplied for imputation")]
    OutcomeSupplied(String),
    #[error("value for `{0}` is not finite")]
    NonFiniteValue(String),
    #[error("covariance of the observed variables is numerically singular at `{variable}` (pivot {pivot:e})")]
    SingularGivenBlock { variable: String, pivot: f64 },
    #[error("{0} imputations requested; use 1 (conditional mean) or at least {MIN_MULTIPLE_IMPUTATIONS}")]
    InvalidImputationCount(usize),
    #[error("conditional covariance is not positive semidefinite")]
    IndefiniteConditionalCovariance,
}

impl ImputationError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownVariable(_) => "UnknownVariable",
            Self::NotInSchema(_) => "UnknownVariable",
            Self::OutcomeSupplied(_) => "OutcomeSupplied",
            Self::NonFiniteValue(_) => "NonFiniteValue",
            Self::SingularGivenBlock { .. } => "SingularGivenBlock",
            Self::InvalidImputationCount(_) => "InvalidImputationCount",
            Self::IndefiniteConditionalCovariance => "IndefiniteConditionalCovariance",
        }
    }
}

type Result<T> = std::result::Result<T, ImputationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ImputationMethod {
    /// Mean imputation.
    #[serde(rename = "m_imp")]
    MeanImputation,
    /// Joint imputation conditioned on observed predictors.
    #[serde(rename = "jmi")]
    Joint,
    /// Joint imputation conditioned on observed predictors and auxiliaries.
    #[serde(rename = "jmi_aux")]
    JointAuxiliary,
}

impl ImputationMethod {
    pub const ALL: [ImputationMethod; 3] = [
        ImputationMethod::MeanImputation,
        ImputationMethod::Joint,
        ImputationMethod::JointAuxiliary,
    ];

    /// Numeric id used in simulation output (1 = M-Imp, 2 = JMI, 3 = JMI aux).
    pub fn id(self) -> u8 {
        match self {
            Self::MeanImputation => 1,
            Self::Joint => 2,
            Self::JointAuxiliary => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.id() == id)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::MeanImputation => "M-Imp",
            Self::Joint => "JMI",
            Self::JointAuxiliary => "JMI-aux",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Self::MeanImputation => "m_imp",
            Self::Joint => "jmi",
            Self::JointAuxiliary => "jmi_aux",
        }
    }
}

impl std::str::FromStr for ImputationMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "m" | "m_imp" | "mimp" | "mean" | "1" => Ok(Self::MeanImputation),
            "jmi" | "2" => Ok(Self::Joint),
            "jmiaux" | "jmi_aux" | "jmi-aux" | "3" => Ok(Self::JointAuxiliary),
            other => Err(format!("unknown imputation method `{other}`")),
        }
    }
}

/// Which variables the joint model conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableSet {
    PredictorsOnly,
    WithAuxiliary,
}

/// One patient's predictor and auxiliary values; `None` marks MISSING.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    schema: Arc<VariableSchema>,
    names: Arc<[String]>,
    values: Vec<Option<f64>>,
}

impl PatientRecord {
    /// Builds a record from name/value pairs. Covariates that are not
    /// mentioned are MISSING. Outcome variables are rejected.
    pub fn new<I, S>(schema: Arc<VariableSchema>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Option<f64>)>,
        S: AsRef<str>,
    {
        let names: Arc<[String]> = schema.covariates().into();
        let mut values = vec![None; names.len()];
        for (name, value) in entries {
            let name = name.as_ref();
            let var = schema
                .get(name)
                .ok_or_else(|| ImputationError::NotInSchema(name.to_string()))?;
            if var.role.is_outcome() {
                return Err(ImputationError::OutcomeSupplied(name.to_string()));
            }
            if let Some(x) = value {
                if !x.is_finite() {
                    return Err(ImputationError::NonFiniteValue(name.to_string()));
                }
            }
            let pos = names.iter().position(|n| n == name).expect("covariate");
            values[pos] = value;
        }
        Ok(Self {
            schema,
            names,
            values,
        })
    }

    /// The complete covariate values of dataset row `row`. The dataset's
    /// schema must be `schema` (or share its covariates).
    pub fn from_dataset_row(schema: Arc<VariableSchema>, data: &Dataset, row: usize) -> Result<Self> {
        let names: Arc<[String]> = schema.covariates().into();
        let values = names
            .iter()
            .map(|n| {
                data.schema()
                    .index_of(n)
                    .map(|c| Some(data.value(row, c)))
                    .ok_or_else(|| ImputationError::NotInSchema(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schema,
            names,
            values,
        })
    }

    pub fn schema(&self) -> &VariableSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<VariableSchema> {
        &self.schema
    }

    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn is_missing(&self, name: &str) -> bool {
        matches!(self.get(name), Some(None))
    }

    /// `(name, value)` pairs in schema order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, Option<f64>)> {
        self.names.iter().map(String::as_str).zip(self.values.iter().copied())
    }

    pub fn missing_names(&self) -> Vec<String> {
        self.entries()
            .filter(|(_, v)| v.is_none())
            .map(|(n, _)| n.to_string())
            .collect()
    }

    pub fn observed(&self) -> BTreeMap<String, f64> {
        self.entries()
            .filter_map(|(n, v)| v.map(|x| (n.to_string(), x)))
            .collect()
    }

    /// Marks `name` as MISSING.
    pub fn set_missing(&mut self, name: &str) -> Result<()> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ImputationError::NotInSchema(name.to_string()))?;
        self.values[i] = None;
        Ok(())
    }

    pub fn set_value(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(ImputationError::NonFiniteValue(name.to_string()));
        }
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ImputationError::NotInSchema(name.to_string()))?;
        self.values[i] = Some(value);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationResult {
    pub method: ImputationMethod,
    /// Observed values (verbatim) plus every imputed value.
    pub completed: BTreeMap<String, f64>,
    /// The MISSING variables that received a value, in schema order.
    pub imputed_names: Vec<String>,
    /// Conditional SD for joint imputation, marginal SD for mean imputation.
    pub conditional_sd: BTreeMap<String, f64>,
    /// Imputed binary variables. Their values are continuous and unrounded,
    /// closer to a probability than to a 0/1 code.
    pub probability_like: Vec<String>,
    /// MISSING variables outside the joint working set; left without a value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved: Vec<String>,
}

impl ImputationResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.completed.get(name).copied()
    }
}

/// Conditional normal distribution of the missing block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalNormal {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
}

/// Distribution of `x[dep]` given `x[given] = x_given` under `N(mu, sigma)`.
/// Indices refer to positions in `pc.variables()`.
pub fn conditional_normal(
    pc: &PopulationCharacteristics,
    dep: &[usize],
    given: &[usize],
    x_given: &[f64],
) -> Result<ConditionalNormal> {
    assert_eq!(given.len(), x_given.len());
    let mu = pc.mu();
    let sigma = pc.sigma();
    let s_dd = sigma.select(dep, dep);
    if given.is_empty() {
        return Ok(ConditionalNormal {
            mean: dep.iter().map(|&i| mu[i]).collect(),
            covariance: s_dd,
        });
    }
    let s_gg = sigma.select(given, given);
    let s_gd = sigma.select(given, dep);
    let chol = Cholesky::factor(&s_gg, SINGULAR_PIVOT_TOL).map_err(|f| {
        ImputationError::SingularGivenBlock {
            variable: pc.variables()[given[f.index]].clone(),
            pivot: f.pivot,
        }
    })?;
    let centered: Vec<f64> = given
        .iter()
        .zip(x_given)
        .map(|(&i, x)| x - mu[i])
        .collect();
    let weights = chol.solve(&centered);
    let mean = dep
        .iter()
        .enumerate()
        .map(|(a, &i)| {
            let cross: f64 = (0..given.len()).map(|b| s_gd[(b, a)] * weights[b]).sum();
            mu[i] + cross
        })
        .collect();
    // Var = S_dd - Bᵀ B with B = L⁻¹ S_gd.
    let b = chol.forward_matrix(&s_gd);
    let mut covariance = s_dd;
    for a1 in 0..dep.len() {
        for a2 in 0..=a1 {
            let mut s = 0.0;
            for k in 0..given.len() {
                s += b[(k, a1)] * b[(k, a2)];
            }
            let v = covariance[(a1, a2)] - s;
            covariance[(a1, a2)] = v;
            covariance[(a2, a1)] = v;
        }
    }
    Ok(ConditionalNormal { mean, covariance })
}

fn probability_like(schema: &VariableSchema, imputed: &[String]) -> Vec<String> {
    imputed
        .iter()
        .filter(|n| schema.get(n).is_some_and(|v| v.kind == VariableKind::Binary))
        .cloned()
        .collect()
}

/// Replaces each MISSING value with its population mean.
pub fn impute_mean(record: &PatientRecord, pc: &PopulationCharacteristics) -> Result<ImputationResult> {
    let mut completed = record.observed();
    let mut conditional_sd = BTreeMap::new();
    let mut imputed_names = Vec::new();
    for (name, value) in record.entries() {
        if value.is_some() {
            continue;
        }
        let i = pc
            .index_of(name)
            .ok_or_else(|| ImputationError::UnknownVariable(name.to_string()))?;
        completed.insert(name.to_string(), pc.mu()[i]);
        conditional_sd.insert(name.to_string(), pc.sigma()[(i, i)].max(0.0).sqrt());
        imputed_names.push(name.to_string());
    }
    Ok(ImputationResult {
        method: ImputationMethod::MeanImputation,
        probability_like: probability_like(record.schema(), &imputed_names),
        completed,
        imputed_names,
        conditional_sd,
        unresolved: Vec::new(),
    })
}

struct WorkingSet {
    /// Positions in `pc` of missing working-set variables.
    dep: Vec<usize>,
    dep_names: Vec<String>,
    given: Vec<usize>,
    x_given: Vec<f64>,
    unresolved: Vec<String>,
}

fn working_set(
    record: &PatientRecord,
    pc: &PopulationCharacteristics,
    variable_set: VariableSet,
) -> Result<WorkingSet> {
    let schema = record.schema();
    let mut ws = WorkingSet {
        dep: Vec::new(),
        dep_names: Vec::new(),
        given: Vec::new(),
        x_given: Vec::new(),
        unresolved: Vec::new(),
    };
    for (name, value) in record.entries() {
        let role = schema.get(name).expect("record built from schema").role;
        let selected = match (role, variable_set) {
            (VariableRole::Predictor, _) => true,
            (VariableRole::Auxiliary, VariableSet::WithAuxiliary) => true,
            _ => false,
        };
        let pos = pc.index_of(name);
        match (selected, pos, value) {
            (true, Some(i), Some(x)) => {
                ws.given.push(i);
                ws.x_given.push(x);
            }
            (true, Some(i), None) => {
                ws.dep.push(i);
                ws.dep_names.push(name.to_string());
            }
            (true, None, None) if role == VariableRole::Predictor => {
                return Err(ImputationError::UnknownVariable(name.to_string()));
            }
            // Auxiliaries the characteristics do not cover drop out of the
            // working set, as do observed predictors they do not cover.
            (_, _, None) => ws.unresolved.push(name.to_string()),
            _ => {}
        }
    }
    Ok(ws)
}

/// Conditional-mean imputation under the multivariate normal model.
pub fn impute_joint(
    record: &PatientRecord,
    pc: &PopulationCharacteristics,
    variable_set: VariableSet,
) -> Result<ImputationResult> {
    let ws = working_set(record, pc, variable_set)?;
    let mut completed = record.observed();
    let mut conditional_sd = BTreeMap::new();
    if !ws.dep.is_empty() {
        let cond = conditional_normal(pc, &ws.dep, &ws.given, &ws.x_given)?;
        for (a, name) in ws.dep_names.iter().enumerate() {
            completed.insert(name.clone(), cond.mean[a]);
            conditional_sd.insert(name.clone(), cond.covariance[(a, a)].max(0.0).sqrt());
        }
    }
    Ok(ImputationResult {
        method: match variable_set {
            VariableSet::PredictorsOnly => ImputationMethod::Joint,
            VariableSet::WithAuxiliary => ImputationMethod::JointAuxiliary,
        },
        probability_like: probability_like(record.schema(), &ws.dep_names),
        completed,
        imputed_names: ws.dep_names,
        conditional_sd,
        unresolved: ws.unresolved,
    })
}

/// Dispatches on `method`.
pub fn impute(
    record: &PatientRecord,
    pc: &PopulationCharacteristics,
    method: ImputationMethod,
) -> Result<ImputationResult> {
    match method {
        ImputationMethod::MeanImputation => impute_mean(record, pc),
        ImputationMethod::Joint => impute_joint(record, pc, VariableSet::PredictorsOnly),
        ImputationMethod::JointAuxiliary => impute_joint(record, pc, VariableSet::WithAuxiliary),
    }
}

/// `n_imp == 1` returns the conditional mean; `n_imp >= 1000` returns i.i.d.
/// draws from the conditional normal, reproducible under `seed`.
pub fn impute_joint_multiple(
    record: &PatientRecord,
    pc: &PopulationCharacteristics,
    variable_set: VariableSet,
    n_imp: usize,
    seed: u64,
) -> Result<Vec<BTreeMap<String, f64>>> {
    if n_imp == 1 {
        return Ok(vec![impute_joint(record, pc, variable_set)?.completed]);
    }
    if n_imp < MIN_MULTIPLE_IMPUTATIONS {
        return Err(ImputationError::InvalidImputationCount(n_imp));
    }
    let ws = working_set(record, pc, variable_set)?;
    let base = record.observed();
    if ws.dep.is_empty() {
        return Ok(vec![base; n_imp]);
    }
    let cond = conditional_normal(pc, &ws.dep, &ws.given, &ws.x_given)?;
    let factor = semidefinite_factor(&cond.covariance, 1e-10)
        .map_err(|_| ImputationError::IndefiniteConditionalCovariance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ws.dep.len();
    let mut z = vec![0.0; k];
    let mut draws = Vec::with_capacity(n_imp);
    for _ in 0..n_imp {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let mut completed = base.clone();
        for (a, name) in ws.dep_names.iter().enumerate() {
            let shift = dot(&factor.row(a)[..=a], &z[..=a]);
            completed.insert(name.clone(), cond.mean[a] + shift);
        }
        draws.push(completed);
    }
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::Variable;

    fn schema(vars: &[(&str, VariableKind, VariableRole)]) -> Arc<VariableSchema> {
        let mut v: Vec<Variable> = vars.iter().map(|(n, k, r)| Variable::new(*n, *k, *r)).collect();
        v.push(Variable::new("time", VariableKind::Continuous, VariableRole::OutcomeTime));
        v.push(Variable::new("status", VariableKind::Binary, VariableRole::OutcomeStatus));
        Arc::new(VariableSchema::new(v).unwrap())
    }

    fn pred(n: &str) -> (&str, VariableKind, VariableRole) {
        (n, VariableKind::Continuous, VariableRole::Predictor)
    }

    fn pc(names: &[&str], mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> PopulationCharacteristics {
        PopulationCharacteristics::new(
            names.iter().map(|s| s.to_string()).collect(),
            mu,
            Matrix::from_rows(&sigma),
            100,
        )
        .unwrap()
    }

    #[test]
    fn mean_imputation_fills_mean_and_marginal_sd() {
        let s = schema(&[pred("a"), pred("b")]);
        let p = pc(&["a", "b"], vec![2.0, 5.0], vec![vec![4.0, 1.0], vec![1.0, 9.0]]);
        let r = PatientRecord::new(s, [("a", None), ("b", Some(1.5))]).unwrap();
        let out = impute_mean(&r, &p).unwrap();
        assert_eq!(out.value("a"), Some(2.0));
        assert_eq!(out.value("b"), Some(1.5));
        assert_eq!(out.imputed_names, vec!["a"]);
        assert_eq!(out.conditional_sd["a"], 2.0);
    }

    #[test]
    fn fully_observed_record_is_unchanged() {
        let s = schema(&[pred("a"), pred("b")]);
        let p = pc(&["a", "b"], vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let r = PatientRecord::new(s, [("a", Some(0.3)), ("b", Some(-1.0))]).unwrap();
        for m in ImputationMethod::ALL {
            let out = impute(&r, &p, m).unwrap();
            assert!(out.imputed_names.is_empty());
            assert_eq!(out.completed, r.observed());
        }
    }

    #[test]
    fn bivariate_schur_complement() {
        let s = schema(&[pred("x1"), pred("x2")]);
        let p = pc(&["x1", "x2"], vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let r = PatientRecord::new(s, [("x1", None), ("x2", Some(2.0))]).unwrap();
        let out = impute_joint(&r, &p, VariableSet::PredictorsOnly).unwrap();
        assert!((out.value("x1").unwrap() - 1.0).abs() < 1e-15);
        assert!((out.conditional_sd["x1"] - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn all_missing_gives_means() {
        let s = schema(&[pred("x1"), pred("x2")]);
        let p = pc(&["x1", "x2"], vec![3.0, -1.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let r = PatientRecord::new(s, Vec::<(&str, Option<f64>)>::new()).unwrap();
        let out = impute_joint(&r, &p, VariableSet::WithAuxiliary).unwrap();
        assert_eq!(out.value("x1"), Some(3.0));
        assert_eq!(out.value("x2"), Some(-1.0));
        assert_eq!(out.conditional_sd["x1"], 1.0);
    }

    #[test]
    fn unknown_missing_variable() {
        let s = schema(&[pred("x1"), pred("x2")]);
        let p = pc(&["x1"], vec![0.0], vec![vec![1.0]]);
        let r = PatientRecord::new(s, [("x1", Some(1.0))]).unwrap();
        assert!(matches!(
            impute_mean(&r, &p),
            Err(ImputationError::UnknownVariable(v)) if v == "x2"
        ));
        assert!(matches!(
            impute_joint(&r, &p, VariableSet::PredictorsOnly),
            Err(ImputationError::UnknownVariable(v)) if v == "x2"
        ));
    }

    #[test]
    fn singular_given_block_is_reported() {
        let s = schema(&[pred("a"), pred("b"), pred("c")]);
        let p = pc(
            &["a", "b", "c"],
            vec![0.0; 3],
            vec![vec![1.0, 1.0, 0.2], vec![1.0, 1.0, 0.2], vec![0.2, 0.2, 1.0]],
        );
        let r = PatientRecord::new(s, [("a", Some(1.0)), ("b", Some(1.0))]).unwrap();
        let err = impute_joint(&r, &p, VariableSet::PredictorsOnly).unwrap_err();
        assert!(matches!(err, ImputationError::SingularGivenBlock { ref variable, .. } if variable == "b"));
    }

    #[test]
    fn auxiliary_outside_pc_shrinks_working_set() {
        let s = schema(&[
            pred("tc"),
            ("ldl", VariableKind::Continuous, VariableRole::Auxiliary),
            ("crp", VariableKind::Continuous, VariableRole::Auxiliary),
        ]);
        let p = pc(&["tc", "ldl"], vec![5.0, 3.0], vec![vec![1.0, 0.7], vec![0.7, 1.0]]);
        let r = PatientRecord::new(s, [("tc", None), ("ldl", Some(4.0)), ("crp", Some(2.0))]).unwrap();
        let out = impute_joint(&r, &p, VariableSet::WithAuxiliary).unwrap();
        assert!((out.value("tc").unwrap() - 5.7).abs() < 1e-12);
        assert_eq!(out.value("crp"), Some(2.0));
    }

    #[test]
    fn binary_imputations_are_flagged_and_unrounded() {
        let s = schema(&[
            pred("age"),
            ("dm", VariableKind::Binary, VariableRole::Predictor),
        ]);
        let p = pc(&["age", "dm"], vec![50.0, 0.2], vec![vec![100.0, 1.0], vec![1.0, 0.16]]);
        let r = PatientRecord::new(s, [("age", Some(70.0))]).unwrap();
        let out = impute_joint(&r, &p, VariableSet::PredictorsOnly).unwrap();
        assert_eq!(out.probability_like, vec!["dm"]);
        assert!((out.value("dm").unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn outcome_values_are_rejected() {
        let s = schema(&[pred("a")]);
        assert!(matches!(
            PatientRecord::new(s, [("time", Some(3.0))]),
            Err(ImputationError::OutcomeSupplied(_))
        ));
    }

    #[test]
    fn multiple_imputation_counts() {
        let s = schema(&[pred("x1"), pred("x2")]);
        let p = pc(&["x1", "x2"], vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let r = PatientRecord::new(s, [("x1", None), ("x2", Some(2.0))]).unwrap();
        let single = impute_joint_multiple(&r, &p, VariableSet::PredictorsOnly, 1, 9).unwrap();
        assert_eq!(single, vec![impute_joint(&r, &p, VariableSet::PredictorsOnly).unwrap().completed]);
        assert_eq!(
            impute_joint_multiple(&r, &p, VariableSet::PredictorsOnly, 500, 9),
            Err(ImputationError::InvalidImputationCount(500))
        );
        assert!(impute_joint_multiple(&r, &p, VariableSet::PredictorsOnly, 0, 9).is_err());
    }

    #[test]
    fn multiple_imputation_mean_within_clt_bound() {
        let s = schema(&[pred("x1"), pred("x2")]);
        let p = pc(&["x1", "x2"], vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        let r = PatientRecord::new(s, [("x1", None), ("x2", Some(2.0))]).unwrap();
        let draws = impute_joint_multiple(&r, &p, VariableSet::PredictorsOnly, 10_000, 42).unwrap();
        assert_eq!(draws.len(), 10_000);
        assert!(draws.iter().all(|d| d["x2"] == 2.0));
        let mean = draws.iter().map(|d| d["x1"]).sum::<f64>() / 10_000.0;
        assert!((mean - 1.0).abs() < 3.0 * (0.75f64 / 10_000.0).sqrt(), "mean {mean}");
        let again = impute_joint_multiple(&r, &p, VariableSet::PredictorsOnly, 10_000, 42).unwrap();
        assert_eq!(draws, again);
    }
}
