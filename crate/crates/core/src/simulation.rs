//! Leave-one-out validation of the imputation methods under missing-predictor
//! scenarios.
//!
//! Four study designs differ in where the population characteristics come
//! from:
//!
//! | study | model | characteristics | evaluated on |
//! |---|---|---|---|
//! | local | refit without patient i | reference data without patient i | all patients |
//! | external | refit without patient i | external dataset | all patients |
//! | enriched | refit without patient i | external + m sampled local patients | patients not sampled |
//! | external model | supplied model | external dataset | all patients |
//!
//! With `fast_loocv` the model is fitted once on all reference patients.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imputation::{impute, ImputationError, ImputationMethod, PatientRecord};
use crate::metrics::{evaluate as evaluate_metrics, EvaluationInput, MetricsError, MetricsReport};
use crate::population::{
    draw_local_sample, estimate_characteristics, estimate_characteristics_excluding, pool_datasets,
    Dataset, PopulationCharacteristics, PopulationError, VariableRole, VariableSchema,
};
use crate::seeds::derive_seed;
use crate::survival::{expected_from_lp, fit_cox, CoxModel, SurvivalError};

/// Enrichment sizes examined by default.
pub const DEFAULT_ENRICHMENT_SIZES: [usize; 6] = [100, 300, 750, 1500, 5000, 10000];

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no rows for method {method}, scenario {scenario}")]
    EmptySubset { method: u8, scenario: u32 },
    #[error("patient {rowref}, scenario {scenario}, method {method}: {source}")]
    AtPatient {
        rowref: u64,
        scenario: u32,
        method: String,
        #[source]
        source: Box<SimulationError>,
    },
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Survival(#[from] SurvivalError),
    #[error(transparent)]
    Imputation(#[from] ImputationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("row file: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimulationError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidConfig(_) => "InvalidConfig",
            Self::UnknownVariable(_) => "UnknownVariable",
            Self::EmptySubset { .. } => "EmptySubset",
            Self::AtPatient { source, .. } => source.code(),
            Self::Population(e) => e.code(),
            Self::Survival(e) => e.code(),
            Self::Imputation(e) => e.code(),
            Self::Metrics(e) => e.code(),
            Self::Csv(_) => "FormatError",
            Self::Io(_) => "Io",
        }
    }
}

type Result<T> = std::result::Result<T, SimulationError>;

/// Predictors set to MISSING together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingScenario {
    pub id: u32,
    pub missing_vars: Vec<String>,
}

impl MissingScenario {
    pub fn new(id: u32, missing_vars: Vec<String>) -> Result<Self> {
        if missing_vars.is_empty() {
            return Err(SimulationError::InvalidConfig(format!("scenario {id} blanks nothing")));
        }
        Ok(Self { id, missing_vars })
    }

    /// Checks that every listed variable is a predictor of `schema`.
    pub fn check(&self, schema: &VariableSchema) -> Result<()> {
        for v in &self.missing_vars {
            match schema.get(v) {
                Some(var) if var.role == VariableRole::Predictor => {}
                _ => return Err(SimulationError::UnknownVariable(v.clone())),
            }
        }
        Ok(())
    }
}

/// The eight scenarios over the predictors age, gender, smoking, sbp, tc,
/// hdl, dm, ad.
pub fn default_scenarios() -> Vec<MissingScenario> {
    let s = |id: u32, vars: &[&str]| MissingScenario {
        id,
        missing_vars: vars.iter().map(|v| v.to_string()).collect(),
    };
    vec![
        s(1, &["sbp", "smoking"]),
        s(2, &["tc", "hdl"]),
        s(3, &["tc", "hdl", "sbp"]),
        s(4, &["tc", "hdl", "sbp", "ad"]),
        s(5, &["tc", "hdl", "ad", "smoking", "dm"]),
        s(6, &["tc", "hdl", "ad", "smoking", "dm", "sbp"]),
        s(7, &["age", "gender", "smoking", "sbp", "tc", "hdl", "dm", "ad"]),
        s(8, &["age", "gender"]),
    ]
}

/// Sets the scenario's variables to MISSING; everything else is unchanged.
pub fn apply_missing_scenario(record: &PatientRecord, scenario: &MissingScenario) -> Result<PatientRecord> {
    scenario.check(record.schema())?;
    let mut out = record.clone();
    for v in &scenario.missing_vars {
        out.set_missing(v)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Local,
    External,
    Enriched,
    ExternalModel,
}

impl Study {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Self::Local),
            2 => Some(Self::External),
            3 => Some(Self::Enriched),
            4 => Some(Self::ExternalModel),
            _ => None,
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Self::Local => 1,
            Self::External => 2,
            Self::Enriched => 3,
            Self::ExternalModel => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub study: Study,
    pub scenarios: Vec<MissingScenario>,
    pub methods: Vec<ImputationMethod>,
    /// Local patients added to the external data (enriched study only).
    pub enrichment_m: usize,
    pub seed: u64,
    /// Fit the model once instead of once per held-out patient.
    pub fast_loocv: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Model predictors; defaults to the reference schema's predictors.
    pub predictors: Option<Vec<String>>,
}

impl SimulationConfig {
    pub fn new(study: Study) -> Self {
        Self {
            study,
            scenarios: default_scenarios(),
            methods: ImputationMethod::ALL.to_vec(),
            enrichment_m: 1500,
            seed: 1,
            fast_loocv: false,
            jobs: None,
            predictors: None,
        }
    }
}

/// One held-out patient under one scenario and method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub lp_ref: f64,
    pub lp_est: f64,
    pub expected: f64,
    pub time: f64,
    pub status: u8,
    pub scenario: u32,
    pub method: u8,
    pub rowref: u64,
}

/// Receives, for each evaluated patient, the row ids the population
/// characteristics were estimated from.
pub type EstimationHook<'a> = dyn Fn(u64, &[u64]) + Sync + 'a;

/// Where each patient's population characteristics come from.
enum PopcharSource {
    LeaveOneOut { vars: Vec<String> },
    Fixed { pc: Arc<PopulationCharacteristics>, row_ids: Vec<u64> },
}

struct Plan<'a> {
    ref_data: &'a Dataset,
    schema: Arc<VariableSchema>,
    eval_rows: Vec<usize>,
    popchar: PopcharSource,
    /// Shared model; `None` refits per patient.
    model: Option<Arc<CoxModel>>,
    predictors: Vec<String>,
    config: &'a SimulationConfig,
}

fn check_config(ref_data: &Dataset, config: &SimulationConfig) -> Result<Vec<String>> {
    if config.scenarios.is_empty() {
        return Err(SimulationError::InvalidConfig("no scenarios".into()));
    }
    if config.methods.is_empty() {
        return Err(SimulationError::InvalidConfig("no methods".into()));
    }
    let mut ids = HashSet::new();
    for s in &config.scenarios {
        if !ids.insert(s.id) {
            return Err(SimulationError::InvalidConfig(format!("duplicate scenario id {}", s.id)));
        }
        s.check(ref_data.schema())?;
    }
    let predictors = config
        .predictors
        .clone()
        .unwrap_or_else(|| ref_data.schema().predictors());
    for p in &predictors {
        match ref_data.schema().get(p) {
            Some(v) if v.role == VariableRole::Predictor => {}
            _ => return Err(SimulationError::UnknownVariable(p.clone())),
        }
    }
    Ok(predictors)
}

fn common_covariates(ref_data: &Dataset, external: &Dataset) -> Vec<String> {
    let ext = external.schema();
    external
        .schema()
        .covariates()
        .into_iter()
        .filter(|n| {
            ref_data
                .schema()
                .get(n)
                .is_some_and(|v| Some(v.role) == ext.get(n).map(|e| e.role))
        })
        .collect()
}

/// Runs the local, external or enriched study with leave-one-out model
/// fitting.
pub fn run_loocv_simulation(
    ref_data: &Dataset,
    external: Option<&Dataset>,
    config: &SimulationConfig,
) -> Result<Vec<SimulationRow>> {
    run_loocv_simulation_with_hook(ref_data, external, config, None)
}

pub fn run_loocv_simulation_with_hook(
    ref_data: &Dataset,
    external: Option<&Dataset>,
    config: &SimulationConfig,
    hook: Option<&EstimationHook<'_>>,
) -> Result<Vec<SimulationRow>> {
    let predictors = check_config(ref_data, config)?;
    let n = ref_data.n_rows();
    let all_rows: Vec<usize> = (0..n).collect();
    let (popchar, eval_rows) = match (config.study, external) {
        (Study::Local, None) => (
            PopcharSource::LeaveOneOut {
                vars: ref_data.schema().covariates(),
            },
            all_rows,
        ),
        (Study::External, Some(ext)) => {
            let vars = common_covariates(ref_data, ext);
            let pc = estimate_characteristics(ext, &vars)?;
            (
                PopcharSource::Fixed {
                    pc: Arc::new(pc),
                    row_ids: ext.row_ids().to_vec(),
                },
                all_rows,
            )
        }
        (Study::Enriched, Some(ext)) => {
            let sample_seed = derive_seed(config.seed, &[3, config.enrichment_m as u64]);
            let (sample, _) = draw_local_sample(ref_data, config.enrichment_m, sample_seed)?;
            let picked: HashSet<u64> = sample.row_ids().iter().copied().collect();
            let pooled = pool_datasets(ext, &sample)?;
            let vars = pooled.schema().covariates();
            let pc = estimate_characteristics(&pooled, &vars)?;
            let eval: Vec<usize> = (0..n)
                .filter(|&i| !picked.contains(&ref_data.row_ids()[i]))
                .collect();
            (
                PopcharSource::Fixed {
                    pc: Arc::new(pc),
                    row_ids: pooled.row_ids().to_vec(),
                },
                eval,
            )
        }
        (Study::ExternalModel, _) => {
            return Err(SimulationError::InvalidConfig(
                "the external-model study takes a supplied model; use run_external_model_simulation".into(),
            ))
        }
        (Study::Local, Some(_)) => {
            return Err(SimulationError::InvalidConfig("the local study takes no external data".into()))
        }
        (_, None) => {
            return Err(SimulationError::InvalidConfig("this study needs external data".into()))
        }
    };
    let model = if config.fast_loocv {
        Some(Arc::new(fit_cox(ref_data, &predictors)?))
    } else {
        None
    };
    let plan = Plan {
        ref_data,
        schema: Arc::new(ref_data.schema().clone()),
        eval_rows,
        popchar,
        model,
        predictors,
        config,
    };
    execute(&plan, hook)
}

/// Applies a supplied model to every reference patient, imputing with
/// characteristics of the external data. No leave-one-out refitting.
pub fn run_external_model_simulation(
    ref_data: &Dataset,
    external: &Dataset,
    model: &CoxModel,
    config: &SimulationConfig,
) -> Result<Vec<SimulationRow>> {
    if config.study != Study::ExternalModel {
        return Err(SimulationError::InvalidConfig("study must be the external-model study".into()));
    }
    let config = SimulationConfig {
        predictors: Some(model.predictors().to_vec()),
        ..config.clone()
    };
    model.check_against(ref_data.schema())?;
    let predictors = check_config(ref_data, &config)?;
    let vars = common_covariates(ref_data, external);
    let pc = estimate_characteristics(external, &vars)?;
    let plan = Plan {
        ref_data,
        schema: Arc::new(ref_data.schema().clone()),
        eval_rows: (0..ref_data.n_rows()).collect(),
        popchar: PopcharSource::Fixed {
            pc: Arc::new(pc),
            row_ids: external.row_ids().to_vec(),
        },
        model: Some(Arc::new(model.clone())),
        predictors,
        config: &config,
    };
    execute(&plan, None)
}

fn execute(plan: &Plan<'_>, hook: Option<&EstimationHook<'_>>) -> Result<Vec<SimulationRow>> {
    let run = || -> Result<Vec<Vec<SimulationRow>>> {
        plan.eval_rows
            .par_iter()
            .map(|&i| patient_rows(plan, i, hook))
            .collect()
    };
    let nested = match plan.config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| SimulationError::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let mut rows: Vec<SimulationRow> = nested.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.method, r.scenario, r.rowref));
    Ok(rows)
}

fn patient_rows(plan: &Plan<'_>, i: usize, hook: Option<&EstimationHook<'_>>) -> Result<Vec<SimulationRow>> {
    let data = plan.ref_data;
    let rowref = data.row_ids()[i];
    let at = |scenario: u32, method: &str, e: SimulationError| SimulationError::AtPatient {
        rowref,
        scenario,
        method: method.to_string(),
        source: Box::new(e),
    };
    let pc = match &plan.popchar {
        PopcharSource::LeaveOneOut { vars } => {
            if let Some(h) = hook {
                let ids: Vec<u64> = (0..data.n_rows())
                    .filter(|&r| r != i)
                    .map(|r| data.row_ids()[r])
                    .collect();
                h(rowref, &ids);
            }
            Arc::new(
                estimate_characteristics_excluding(data, vars, i)
                    .map_err(|e| at(0, "-", e.into()))?,
            )
        }
        PopcharSource::Fixed { pc, row_ids } => {
            if let Some(h) = hook {
                h(rowref, row_ids);
            }
            Arc::clone(pc)
        }
    };
    let model = match &plan.model {
        Some(m) => Arc::clone(m),
        None => {
            let rest: Vec<usize> = (0..data.n_rows()).filter(|&r| r != i).collect();
            Arc::new(fit_cox(&data.select_rows(&rest), &plan.predictors).map_err(|e| at(0, "-", e.into()))?)
        }
    };
    let record = PatientRecord::from_dataset_row(Arc::clone(&plan.schema), data, i)
        .map_err(|e| at(0, "-", e.into()))?;
    let complete = record.observed();
    let lp_ref = lp_of(&model, &complete).map_err(|e| at(0, "-", e))?;
    let time = data.value(i, data.column_index(data.schema().time_name())?);
    let status = data.value(i, data.column_index(data.schema().status_name())?);
    let mut rows = Vec::with_capacity(plan.config.scenarios.len() * plan.config.methods.len());
    for scenario in &plan.config.scenarios {
        let blanked = apply_missing_scenario(&record, scenario)?;
        for &method in &plan.config.methods {
            let result = impute(&blanked, &pc, method).map_err(|e| at(scenario.id, method.key(), e.into()))?;
            let lp_est = lp_of(&model, &result.completed).map_err(|e| at(scenario.id, method.key(), e))?;
            rows.push(SimulationRow {
                lp_ref,
                lp_est,
                expected: held_out_expected(&model, lp_est, time, status),
                time,
                status: status as u8,
                scenario: scenario.id,
                method: method.id(),
                rowref,
            });
        }
    }
    Ok(rows)
}

/// `H0(time) * exp(lp)`. A held-out event earlier than every event of the
/// fitting data would get zero expectation and a degenerate calibration
/// likelihood; it takes the first baseline step instead.
fn held_out_expected(model: &CoxModel, lp: f64, time: f64, status: f64) -> f64 {
    let e = expected_from_lp(model, lp, time);
    match model.baseline().first() {
        Some(first) if e == 0.0 && status == 1.0 => first.cumhaz * lp.exp(),
        _ => e,
    }
}

fn lp_of(model: &CoxModel, values: &BTreeMap<String, f64>) -> Result<f64> {
    Ok(crate::survival::linear_predictor(model, values)?)
}

/// Performance of one method in one scenario.
pub fn evaluate(rows: &[SimulationRow], method: ImputationMethod, scenario: u32) -> Result<MetricsReport> {
    let subset: Vec<&SimulationRow> = rows
        .iter()
        .filter(|r| r.method == method.id() && r.scenario == scenario)
        .collect();
    if subset.is_empty() {
        return Err(SimulationError::EmptySubset {
            method: method.id(),
            scenario,
        });
    }
    let col = |f: fn(&SimulationRow) -> f64| subset.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let lp_ref = col(|r| r.lp_ref);
    let lp_est = col(|r| r.lp_est);
    let expected = col(|r| r.expected);
    let time = col(|r| r.time);
    let status = col(|r| f64::from(r.status));
    Ok(evaluate_metrics(EvaluationInput {
        lp_ref: &lp_ref,
        lp_est: &lp_est,
        expected: &expected,
        time: &time,
        status: &status,
    })?)
}

pub fn write_rows_csv<W: Write>(rows: &[SimulationRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(|e| SimulationError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_rows_csv(rows: &[SimulationRow], path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_rows_csv(rows, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(reader: R) -> Result<Vec<SimulationRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    r.deserialize()
        .map(|row| row.map_err(|e| SimulationError::Csv(e.to_string())))
        .collect()
}

pub fn load_rows_csv(path: impl AsRef<Path>) -> Result<Vec<SimulationRow>> {
    read_rows_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{Variable, VariableKind};

    fn tiny() -> Dataset {
        let schema = VariableSchema::new(vec![
            Variable::new("a", VariableKind::Continuous, VariableRole::Predictor),
            Variable::new("b", VariableKind::Continuous, VariableRole::Predictor),
            Variable::new("aux", VariableKind::Continuous, VariableRole::Auxiliary),
            Variable::new("time", VariableKind::Continuous, VariableRole::OutcomeTime),
            Variable::new("status", VariableKind::Binary, VariableRole::OutcomeStatus),
        ])
        .unwrap();
        let rows = (0..30)
            .map(|i| {
                let f = i as f64;
                let a = (1.3 * f).sin();
                let b = (0.7 * f + 1.0).cos();
                let time = 1.0 + ((2.9 * f).sin() + 1.2 - 0.4 * a).abs() * 10.0;
                vec![a, b, 0.8 * a + 0.2 * (5.0 * f).sin(), time, f64::from(i % 3 != 0)]
            })
            .collect();
        Dataset::with_sequential_ids(schema, rows).unwrap()
    }

    #[test]
    fn default_scenario_catalog() {
        let s = default_scenarios();
        assert_eq!(s.len(), 8);
        assert_eq!(s[0].missing_vars, vec!["sbp", "smoking"]);
        assert_eq!(s[4].missing_vars, vec!["tc", "hdl", "ad", "smoking", "dm"]);
        assert_eq!(s[6].missing_vars.len(), 8);
    }

    #[test]
    fn row_count_for_single_method() {
        let data = tiny();
        let mut cfg = SimulationConfig::new(Study::Local);
        cfg.scenarios = vec![MissingScenario::new(1, vec!["b".into()]).unwrap()];
        cfg.methods = vec![ImputationMethod::MeanImputation];
        let rows = run_loocv_simulation(&data, None, &cfg).unwrap();
        assert_eq!(rows.len(), 30);
        assert!(rows.windows(2).all(|w| w[0].rowref < w[1].rowref));
    }

    #[test]
    fn unknown_scenario_variable() {
        let data = tiny();
        let mut cfg = SimulationConfig::new(Study::Local);
        cfg.scenarios = vec![MissingScenario::new(1, vec!["zzz".into()]).unwrap()];
        assert!(matches!(
            run_loocv_simulation(&data, None, &cfg),
            Err(SimulationError::UnknownVariable(_))
        ));
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let data = tiny();
        let mut cfg = SimulationConfig::new(Study::Local);
        cfg.scenarios = vec![MissingScenario::new(2, vec!["a".into(), "b".into()]).unwrap()];
        let rows = run_loocv_simulation(&data, None, &cfg).unwrap();
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with("lp_ref,lp_est,expected,time,status,scenario,method,rowref\n"));
        assert_eq!(read_rows_csv(&buf[..]).unwrap(), rows);
    }
}
