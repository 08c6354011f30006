//! Draws from the conditional distribution of the missing predictors and
//! the spread they induce in predicted 10-year risk.

use std::sync::Arc;

use rtimpute::imputation::{impute_joint, impute_joint_multiple, PatientRecord, VariableSet};
use rtimpute::population::estimate_characteristics;
use rtimpute::survival::{fit_cox, linear_predictor, ten_year_risk};
use rtimpute::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticCohortSpec {
        n_local: 3000,
        n_external: 100,
        ..SyntheticCohortSpec::default()
    };
    let data = generate_synthetic_cohorts(&spec, 8)?.local;
    let schema = Arc::new(data.schema().clone());
    let pc = estimate_characteristics(&data, &schema.covariates())?;
    let model = fit_cox(&data, &schema.predictors())?;

    let record = PatientRecord::new(
        schema,
        [
            ("age", Some(58.0)),
            ("gender", Some(0.0)),
            ("sbp", Some(152.0)),
            ("ldl", Some(3.9)),
            ("hba1c", Some(7.4)),
        ],
    )?;

    let mean = impute_joint(&record, &pc, VariableSet::WithAuxiliary)?;
    let risk_mean = ten_year_risk(&model, linear_predictor(&model, &mean.completed)?)?;

    let draws = impute_joint_multiple(&record, &pc, VariableSet::WithAuxiliary, 2000, 42)?;
    let mut risks: Vec<f64> = draws
        .iter()
        .map(|d| ten_year_risk(&model, linear_predictor(&model, d)?))
        .collect::<Result<_, _>>()?;
    risks.sort_by(f64::total_cmp);
    let q = |p: f64| risks[((risks.len() - 1) as f64 * p).round() as usize];

    println!("risk at the conditional mean: {risk_mean:.4}");
    println!("risk over {} draws: median {:.4}, 90% interval [{:.4}, {:.4}]", risks.len(), q(0.5), q(0.05), q(0.95));
    Ok(())
}
